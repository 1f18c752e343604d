#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <map>
#include <set>
#include <vector>

#include "treasure/engine.hpp"
#include "treasure/hexmap.hpp"

namespace treasure::testing {

// Independent neighbour oracle: odd-r offset -> cube coordinates.
struct Cube {
  int x, y, z;
};

inline Cube to_cube(HexCoord c) {
  const int x = c.col - (c.row - (c.row & 1)) / 2;
  const int z = c.row;
  return {x, -x - z, z};
}

inline int cube_distance(HexCoord a, HexCoord b) {
  const Cube p = to_cube(a), q = to_cube(b);
  return std::max({std::abs(p.x - q.x), std::abs(p.y - q.y), std::abs(p.z - q.z)});
}

inline TreasureMap make_map(BoardDims dims, std::vector<Triangle> mines) {
  TreasureMap m;
  m.dims = dims;
  for (std::size_t k = 0; k < mines.size(); ++k) m.mines.push_back({static_cast<int>(k), mines[k]});
  return m;
}

inline GameConfig config(Condition c, int players = 4, int rounds = 50, std::uint64_t seed = 1) {
  GameConfig g;
  g.condition = c;
  g.n_players = players;
  g.rounds = rounds;
  g.seed = seed;
  return g;
}

inline std::vector<Move> skips(int n) { return std::vector<Move>(n, Move::skip()); }

// Brute force: every mutually adjacent triple on the board that contains the
// known cells, avoids searched-empty cells and does not touch treasures of
// other mines. Posterior of a cell is the share of triples containing it.
inline std::map<HexCoord, double> posterior_oracle(BoardDims dims, const std::vector<HexCoord>& known,
                                                  const std::set<HexCoord>& black,
                                                  const std::vector<HexCoord>& others) {
  std::vector<HexCoord> near;
  for (int i = 0; i < dims.cell_count(); ++i)
    if (cube_distance(dims.coord(i), known[0]) <= 2) near.push_back(dims.coord(i));
  std::vector<std::array<HexCoord, 3>> ok;
  for (std::size_t a = 0; a < near.size(); ++a)
    for (std::size_t b = a + 1; b < near.size(); ++b)
      for (std::size_t c = b + 1; c < near.size(); ++c) {
        const std::array<HexCoord, 3> t{near[a], near[b], near[c]};
        if (cube_distance(t[0], t[1]) != 1 || cube_distance(t[1], t[2]) != 1 || cube_distance(t[0], t[2]) != 1)
          continue;
        bool good = true;
        for (HexCoord k : known) good = good && std::find(t.begin(), t.end(), k) != t.end();
        for (HexCoord x : t) {
          if (black.count(x)) good = false;
          for (HexCoord o : others)
            if (cube_distance(x, o) <= 1) good = false;
        }
        if (good) ok.push_back(t);
      }
  std::map<HexCoord, double> out;
  for (const auto& t : ok)
    for (HexCoord x : t)
      if (std::find(known.begin(), known.end(), x) == known.end()) out[x] += 1.0 / ok.size();
  return out;
}

}  // namespace treasure::testing
