#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace treasure {

// Offset coordinates, odd rows shifted half a cell to the right ("odd-r").
struct HexCoord {
  int col = 0;
  int row = 0;
  auto operator<=>(const HexCoord&) const = default;
};

std::string to_string(HexCoord c);

struct BoardDims {
  int width = 70;
  int height = 30;

  constexpr bool contains(HexCoord c) const {
    return c.col >= 0 && c.col < width && c.row >= 0 && c.row < height;
  }
  constexpr int cell_count() const { return width * height; }
  constexpr int index(HexCoord c) const { return c.row * width + c.col; }
  constexpr HexCoord coord(int index) const { return {index % width, index / width}; }
  auto operator<=>(const BoardDims&) const = default;
};

class InvalidCoordinate : public std::out_of_range {
 public:
  explicit InvalidCoordinate(HexCoord c);
  HexCoord coord;
};

// The six cells around `c` in cyclic order, ignoring board bounds.
// Consecutive entries (including 5 -> 0) are adjacent to each other.
std::array<HexCoord, 6> ring(HexCoord c);

// True iff a and b are distinct hex neighbours (no bounds check).
bool adjacent(HexCoord a, HexCoord b);

// In-bounds neighbours of c; throws InvalidCoordinate when c is off the board.
std::vector<HexCoord> neighbors(HexCoord c, BoardDims dims);

using Triangle = std::array<HexCoord, 3>;

// The six tight triangles containing `anchor`, ignoring bounds.
std::array<Triangle, 6> triangles_around(HexCoord anchor);

struct Mine {
  int id = 0;
  Triangle cells{};
  bool operator==(const Mine&) const = default;
};

struct TreasureMap {
  BoardDims dims{};
  std::uint64_t seed = 0;
  std::vector<Mine> mines;

  int treasure_count() const { return static_cast<int>(mines.size()) * 3; }
  double density() const {
    return static_cast<double>(treasure_count()) / dims.cell_count();
  }
  // Per-cell index into `mines`, -1 for empty cells. Assumes no overlap.
  std::vector<int> mine_lookup() const;

  bool operator==(const TreasureMap&) const = default;
};

// Requested configuration cannot be packed at all (caller error).
class InvalidMapRequest : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Rejection sampling ran out of attempts on a configuration that may be
// feasible in principle.
class MapGenerationError : public std::runtime_error {
 public:
  MapGenerationError(int attempts, int placed, int requested);
  int attempts;
  int placed;
  int requested;
};

inline constexpr int kPlacementBudget = 10000;

// Upper bound on the number of pairwise non-adjacent tight triangles that fit
// on the board. Any request above it is provably infeasible.
int max_feasible_mines(BoardDims dims);

// Pure function of its arguments: identical inputs give identical maps.
TreasureMap generate_map(std::uint64_t seed, int width = 70, int height = 30, int mine_count = 35);

struct Violation {
  enum class Kind { OutOfBounds, NotTriangle, Overlap, AdjacentMines, DuplicateId, BadDimensions };
  Kind kind;
  int mine_id;
  std::string detail;
};

std::string_view to_string(Violation::Kind kind);

// Lists every broken map invariant; empty iff the map is valid. Never throws.
std::vector<Violation> validate_map(const TreasureMap& map);

class MapParseError : public std::runtime_error {
 public:
  MapParseError(std::string location, const std::string& message);
  std::string location;
};

std::string serialize_map(const TreasureMap& map);
TreasureMap parse_map(std::string_view json_text);

}  // namespace treasure
