#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gromov/words.hpp"

namespace gromov {

// dart 2e runs src->dst of edge e, dart 2e+1 runs dst->src
inline constexpr int rev_dart(int d) { return d ^ 1; }
inline constexpr int dart_edge(int d) { return d >> 1; }

struct DiagramEdge {
    int src = 0, dst = 0;
};

struct DiagramFace {
    int bears = 1;              // relator index in 1..n
    int orientation = 1;        // +1 reads along the walk, -1 against it
    std::vector<int> boundary;  // closed walk of darts, counter-clockwise
    int distinguished = 0;      // index into boundary
};

struct Diagram {
    int num_vertices = 0;
    std::vector<DiagramEdge> edges;
    std::vector<DiagramFace> faces;
    int n = 0;  // 0 means max bearing
    // restricted edge -> letter read by its face at that edge
    std::map<int, Letter> restrictions;

    int relator_count() const;
    int face_length() const { return faces.empty() ? 0 : static_cast<int>(faces.front().boundary.size()); }
    int tail(int d) const { return (d & 1) ? edges[static_cast<std::size_t>(d >> 1)].dst : edges[static_cast<std::size_t>(d >> 1)].src; }
    int head(int d) const { return tail(rev_dart(d)); }
    // dart read as the k-th letter (0-based) of face f
    int reading_dart(std::size_t f, int k) const;
    // 0-based reading index of the walk position
    int reading_index(std::size_t f, int pos) const;
};

// derived combinatorial structure of a valid diagram
struct Topology {
    std::vector<int> dart_face;  // face index or -1 for outside
    std::vector<int> dart_pos;   // position in that face walk
    std::vector<int> rho;        // next dart around the tail vertex
    std::vector<int> outer_walk;  // darts of the outer face in phi order
    std::vector<int> degree;     // per vertex, loops counted twice
    std::vector<bool> internal;  // per edge: both darts in cells
    std::vector<bool> on_boundary;
    int outer_faces = 0;
    bool disk = true;  // every vertex link is a single chain
};

struct ValidationReport {
    bool valid = false;
    std::vector<std::string> violations;
    Topology topology;
};

ValidationReport validate(const Diagram& dg);
// throws PreconditionError listing violations
Topology require_valid(const Diagram& dg);

bool is_reduced(const Diagram& dg);
bool is_reduced(const Diagram& dg, const Topology& t);

struct ConstraintReport {
    std::vector<int> belongs;  // per edge: face or -1
    std::vector<int> E_face;
    std::vector<int> E_relator;    // index i-1
    std::vector<int> multiplicity;  // index i-1, faces bearing i
    std::vector<int> multiplicity_sorted;  // m_1 >= m_2 >= ...
    int d_c = 0;
    int internal_edges = 0;
    int restricted_edges = 0;
    int boundary_edges = 0;     // |dX| as edges on the boundary
    int boundary_length = 0;    // length of the outer walk
    int faces = 0;
    int l = 0;
    bool tie = false;  // never fillable
};

ConstraintReport belonging(const Diagram& dg);

enum class FillMode { First, All, Count };

struct FillOptions {
    FillMode mode = FillMode::First;
    bool distinct = false;  // distinct words for distinct indices
    int upto = 0;           // only relators 1..upto; 0 means all
    long long limit = 10'000'000;  // max stored fillings
};

struct FillResult {
    long long count = 0;
    std::vector<std::vector<std::size_t>> fillings;  // indices into the word list, per relator index
    bool fillable() const { return count > 0; }
};

FillResult fill(const Diagram& dg, const std::vector<Word>& words, const FillOptions& opt = {});
// independent check of the filling conditions for words w_1..w_k
bool verify_filling(const Diagram& dg, const std::vector<Word>& ws);

struct BoundaryWord {
    Word raw;
    Word reduced;
};
// counter-clockwise reading of the boundary; ws[i] fills relator i+1
BoundaryWord boundary_word(const Diagram& dg, const std::vector<Word>& ws);

struct IsoperimetricResult {
    double ratio = 0;
    mpq_class exact_ratio;
    mpq_class threshold;
    bool passes = false;
};
IsoperimetricResult isoperimetric_check(const Diagram& dg, const mpq_class& d, const mpq_class& epsilon);

struct BoundaryPath {
    std::vector<int> edges;  // edge ids; empty means the single vertex
    int vertex = -1;
};

struct LadderCell {
    bool two_cell = true;
    int index = 0;  // face index or edge index
};

struct LadderVerdict {
    bool is_ladder = false;
    std::vector<LadderCell> cells;
    std::string reason;
};

LadderVerdict classify_ladder(const Diagram& dg, const BoundaryPath& beta1, const BoundaryPath& beta2);

// rooted breadth-first encoding; equal codes iff data-preserving isomorphic
std::vector<int> canonical_code(const Diagram& dg);
std::vector<int> shape_code(const Diagram& dg);

struct EnumerationResult {
    std::vector<Diagram> diagrams;
    std::vector<long long> count_by_faces;  // index = face count
    std::vector<long long> shapes_by_faces;
    double log_count = 0;      // log base l of the total count
    double log_shape_factor = 0;  // log base l of l^(4C)
};

inline constexpr long long kDefaultDiagramBudget = 3'000'000;
EnumerationResult enumerate_diagrams(int C, int l, long long budget = kDefaultDiagramBudget);
std::vector<Diagram> enumerate_shapes(int C, int l);

// faces are l-gons; sides (face, k) glued pairwise, running in opposite directions
Diagram glue_polygons(int faces, int l, const std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>>& glued);

Diagram diagram_from_json(const nlohmann::json& j);
nlohmann::json diagram_to_json(const Diagram& dg);

}  // namespace gromov
