#include "treasure/hexmap.hpp"

#include <algorithm>
#include <json.hpp>
#include <map>
#include <mutex>

#include "treasure/random.hpp"

namespace treasure {

std::string to_string(HexCoord c) {
  return "(" + std::to_string(c.col) + "," + std::to_string(c.row) + ")";
}

InvalidCoordinate::InvalidCoordinate(HexCoord c)
    : std::out_of_range("coordinate " + to_string(c) + " is outside the board"), coord(c) {}

std::array<HexCoord, 6> ring(HexCoord c) {
  const int col = c.col;
  const int row = c.row;
  // Clockwise from east. Odd rows are shifted right, so their diagonal
  // neighbours sit at col and col+1; even rows at col-1 and col.
  const int shift = (row & 1) ? 0 : -1;
  return {{{col + 1, row},
           {col + 1 + shift, row + 1},
           {col + shift, row + 1},
           {col - 1, row},
           {col + shift, row - 1},
           {col + 1 + shift, row - 1}}};
}

bool adjacent(HexCoord a, HexCoord b) {
  if (std::abs(a.row - b.row) > 1) return false;
  for (HexCoord n : ring(a))
    if (n == b) return true;
  return false;
}

std::vector<HexCoord> neighbors(HexCoord c, BoardDims dims) {
  if (!dims.contains(c)) throw InvalidCoordinate(c);
  std::vector<HexCoord> out;
  out.reserve(6);
  for (HexCoord n : ring(c))
    if (dims.contains(n)) out.push_back(n);
  return out;
}

std::array<Triangle, 6> triangles_around(HexCoord anchor) {
  const auto r = ring(anchor);
  std::array<Triangle, 6> out{};
  for (int i = 0; i < 6; ++i) out[i] = {anchor, r[i], r[(i + 1) % 6]};
  return out;
}

std::vector<int> TreasureMap::mine_lookup() const {
  std::vector<int> lookup(dims.cell_count(), -1);
  for (std::size_t k = 0; k < mines.size(); ++k)
    for (HexCoord c : mines[k].cells)
      if (dims.contains(c)) lookup[dims.index(c)] = static_cast<int>(k);
  return lookup;
}

MapGenerationError::MapGenerationError(int attempts_, int placed_, int requested_)
    : std::runtime_error("map generation gave up after " + std::to_string(attempts_) +
                         " placement attempts with " + std::to_string(placed_) + " of " +
                         std::to_string(requested_) + " mines placed"),
      attempts(attempts_),
      placed(placed_),
      requested(requested_) {}

namespace {

int packing_bound(BoardDims dims) {
  // Each empty cell borders at most three mines (mine cells around it may not
  // be consecutive on its ring), and every placed triangle has at least
  // `min_border` in-bounds border cells. So 3m + m*min_border/3 <= cells.
  int min_border = -1;
  std::vector<int> mark(dims.cell_count(), 0);
  int stamp = 0;
  for (int i = 0; i < dims.cell_count(); ++i) {
    for (const Triangle& t : triangles_around(dims.coord(i))) {
      if (!std::all_of(t.begin(), t.end(), [&](HexCoord c) { return dims.contains(c); })) continue;
      ++stamp;
      for (HexCoord c : t) mark[dims.index(c)] = stamp;
      int border = 0;
      for (HexCoord c : t)
        for (HexCoord n : ring(c)) {
          if (!dims.contains(n)) continue;
          int& m = mark[dims.index(n)];
          if (m == stamp || m == -stamp) continue;
          m = -stamp;
          ++border;
        }
      for (HexCoord c : t)
        for (HexCoord n : ring(c))
          if (dims.contains(n) && mark[dims.index(n)] == -stamp) mark[dims.index(n)] = 0;
      if (min_border < 0 || border < min_border) min_border = border;
    }
  }
  if (min_border < 0) return 0;
  // Largest m with 9m + m*min_border <= 3*cells.
  return 3 * dims.cell_count() / (9 + min_border);
}

}  // namespace

int max_feasible_mines(BoardDims dims) {
  if (dims.width <= 0 || dims.height <= 0) return 0;
  // The brute force is ~1e6 steps on the default board; map generation asks
  // for it on every call, so remember it per board size.
  static std::mutex mu;
  static std::map<std::pair<int, int>, int> cache;
  std::lock_guard lock(mu);
  auto [it, fresh] = cache.try_emplace({dims.width, dims.height}, 0);
  if (fresh) it->second = packing_bound(dims);
  return it->second;
}

TreasureMap generate_map(std::uint64_t seed, int width, int height, int mine_count) {
  if (width <= 0 || height <= 0) throw InvalidMapRequest("board dimensions must be positive");
  if (mine_count < 0) throw InvalidMapRequest("mine count must be non-negative");
  const BoardDims dims{width, height};
  if (mine_count > 0 && mine_count > max_feasible_mines(dims))
    throw InvalidMapRequest(std::to_string(mine_count) + " mines cannot be packed on a " +
                            std::to_string(width) + "x" + std::to_string(height) +
                            " board (bound: " + std::to_string(max_feasible_mines(dims)) + ")");

  TreasureMap map{dims, seed, {}};
  map.mines.reserve(mine_count);
  // blocked[i]: i is a mine cell or borders one, so no new mine may use it.
  std::vector<std::uint8_t> blocked(dims.cell_count(), 0);
  Stream rng(seed, Purpose::MapLayout,
             {static_cast<std::uint64_t>(width), static_cast<std::uint64_t>(height),
              static_cast<std::uint64_t>(mine_count)});

  int attempts = 0;
  while (static_cast<int>(map.mines.size()) < mine_count) {
    if (attempts >= kPlacementBudget)
      throw MapGenerationError(attempts, static_cast<int>(map.mines.size()), mine_count);
    ++attempts;
    const HexCoord anchor = dims.coord(static_cast<int>(rng.below(dims.cell_count())));
    const Triangle t = triangles_around(anchor)[rng.below(6)];
    const bool fits = std::all_of(t.begin(), t.end(), [&](HexCoord c) {
      return dims.contains(c) && !blocked[dims.index(c)];
    });
    if (!fits) continue;
    for (HexCoord c : t) {
      blocked[dims.index(c)] = 1;
      for (HexCoord n : ring(c))
        if (dims.contains(n)) blocked[dims.index(n)] = 1;
    }
    Triangle sorted = t;
    std::sort(sorted.begin(), sorted.end(),
              [](HexCoord a, HexCoord b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
    map.mines.push_back(Mine{static_cast<int>(map.mines.size()), sorted});
  }
  return map;
}

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::OutOfBounds: return "out-of-bounds";
    case Violation::Kind::NotTriangle: return "not-triangle";
    case Violation::Kind::Overlap: return "overlap";
    case Violation::Kind::AdjacentMines: return "adjacent-mines";
    case Violation::Kind::DuplicateId: return "duplicate-id";
    case Violation::Kind::BadDimensions: return "bad-dimensions";
  }
  return "unknown";
}

std::vector<Violation> validate_map(const TreasureMap& map) {
  std::vector<Violation> out;
  const BoardDims dims = map.dims;
  if (dims.width <= 0 || dims.height <= 0) {
    out.push_back({Violation::Kind::BadDimensions, -1,
                   "board is " + std::to_string(dims.width) + "x" + std::to_string(dims.height)});
    return out;
  }
  const int cells = dims.cell_count();
  if (static_cast<long long>(map.mines.size()) * 3 > cells)
    out.push_back({Violation::Kind::BadDimensions, -1,
                   std::to_string(map.mines.size()) + " mines exceed the cell count"});

  std::vector<int> ids;
  for (const Mine& m : map.mines) ids.push_back(m.id);
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 1; i < ids.size(); ++i)
    if (ids[i] == ids[i - 1]) out.push_back({Violation::Kind::DuplicateId, ids[i], "mine id repeated"});

  std::vector<int> owner(cells, -1);
  for (std::size_t k = 0; k < map.mines.size(); ++k) {
    const Mine& m = map.mines[k];
    bool in_bounds = true;
    for (HexCoord c : m.cells)
      if (!dims.contains(c)) {
        out.push_back({Violation::Kind::OutOfBounds, m.id, "cell " + to_string(c) + " is off the board"});
        in_bounds = false;
      }
    const auto& c = m.cells;
    if (!(adjacent(c[0], c[1]) && adjacent(c[1], c[2]) && adjacent(c[0], c[2])))
      out.push_back({Violation::Kind::NotTriangle, m.id, "cells are not pairwise adjacent"});
    if (!in_bounds) continue;
    for (HexCoord cell : m.cells) {
      int& o = owner[dims.index(cell)];
      if (o >= 0 && o != static_cast<int>(k))
        out.push_back({Violation::Kind::Overlap, m.id,
                       "cell " + to_string(cell) + " also belongs to mine " +
                           std::to_string(map.mines[o].id)});
      else
        o = static_cast<int>(k);
    }
  }

  // Each unordered pair of touching mines is reported once.
  std::vector<std::pair<int, int>> touching;
  for (std::size_t k = 0; k < map.mines.size(); ++k)
    for (HexCoord cell : map.mines[k].cells) {
      if (!dims.contains(cell)) continue;
      for (HexCoord n : ring(cell)) {
        if (!dims.contains(n)) continue;
        const int o = owner[dims.index(n)];
        if (o >= 0 && o != static_cast<int>(k))
          touching.emplace_back(std::min<int>(k, o), std::max<int>(k, o));
      }
    }
  std::sort(touching.begin(), touching.end());
  touching.erase(std::unique(touching.begin(), touching.end()), touching.end());
  for (auto [a, b] : touching)
    out.push_back({Violation::Kind::AdjacentMines, map.mines[a].id,
                   "mine " + std::to_string(map.mines[a].id) + " touches mine " +
                       std::to_string(map.mines[b].id)});
  return out;
}

MapParseError::MapParseError(std::string location_, const std::string& message)
    : std::runtime_error("map parse error at " + location_ + ": " + message),
      location(std::move(location_)) {}

std::string serialize_map(const TreasureMap& map) {
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["width"] = map.dims.width;
  doc["height"] = map.dims.height;
  doc["seed"] = map.seed;
  auto mines = nlohmann::ordered_json::array();
  for (const Mine& m : map.mines) {
    nlohmann::ordered_json jm;
    jm["id"] = m.id;
    auto cells = nlohmann::ordered_json::array();
    for (HexCoord c : m.cells) cells.push_back({c.col, c.row});
    jm["cells"] = std::move(cells);
    mines.push_back(std::move(jm));
  }
  doc["mines"] = std::move(mines);
  return doc.dump();
}

namespace {

const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw MapParseError(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw MapParseError(where + "/" + key, "missing field");
  return *it;
}

template <typename T>
T require_integer(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number_integer()) throw MapParseError(where + "/" + key, "expected an integer");
  return v.get<T>();
}

}  // namespace

TreasureMap parse_map(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MapParseError("byte " + std::to_string(e.byte), e.what());
  }
  const std::string root;
  if (require_integer<int>(doc, "version", root) != 1)
    throw MapParseError("/version", "unsupported version");
  TreasureMap map;
  map.dims.width = require_integer<int>(doc, "width", root);
  map.dims.height = require_integer<int>(doc, "height", root);
  map.seed = require_integer<std::uint64_t>(doc, "seed", root);
  const auto& mines = require(doc, "mines", root);
  if (!mines.is_array()) throw MapParseError("/mines", "expected an array");
  for (std::size_t i = 0; i < mines.size(); ++i) {
    const std::string where = "/mines/" + std::to_string(i);
    Mine m;
    m.id = require_integer<int>(mines[i], "id", where);
    const auto& cells = require(mines[i], "cells", where);
    if (!cells.is_array() || cells.size() != 3)
      throw MapParseError(where + "/cells", "expected exactly 3 cells");
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& cell = cells[k];
      if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number_integer() ||
          !cell[1].is_number_integer())
        throw MapParseError(where + "/cells/" + std::to_string(k), "expected [col,row]");
      m.cells[k] = {cell[0].get<int>(), cell[1].get<int>()};
    }
    map.mines.push_back(m);
  }
  return map;
}

}  // namespace treasure
