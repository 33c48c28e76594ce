#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "gromov/cayley.hpp"
#include "gromov/model.hpp"
#include "gromov/words.hpp"

namespace gromov {

struct RoundTreeParams {
    int V = 2;
    int H = 4;
    int ext_offset = 2;
    int ext_len = 2;
    int seg_len = 0;  // 0: floor(l / H)
    mpq_class beta = 0;  // 0: derived from V and ext_len
    mpq_class eta = 0;   // 0: ext_len / l
    double epsilon = 0.01;
    bool strict_lengths = false;
    long long search_budget = 2'000'000;
    // two stated values of the probe constant; echoed only, no probe reads them
    double A = 25e3;
    double A_recalled = 25e5;

    int k() const { return ext_offset + ext_len; }
    // fills derived defaults, throws DomainError on invalid values
    void normalize(int m, int l);
    nlohmann::json to_json() const;
};

struct RTEdge {
    int src, dst;
    Letter label;  // read src -> dst
    int level;
};

// darts: 2e runs src->dst, 2e+1 runs dst->src
struct RTCell {
    int level = 0;
    std::vector<int> darts;  // closed boundary walk
    Word word;               // label read along darts
    int relator = 0;
    int bracket = -1;
    std::vector<int> sector;
};

struct Sector {
    std::vector<int> index;
    std::vector<int> cells;
    std::vector<int> left, right;  // dart paths leaving the base vertex
    std::vector<int> outer;        // dart path from the end of left to the end of right
    int level() const { return static_cast<int>(index.size()); }
};

struct Bracket {
    int cell = -1;
    int level = 0;
    int k = 0;
    std::vector<int> path;  // vertices v1 .. p1 .. p2 .. v2
    int v1 = -1, p1 = -1, p2 = -1, v2 = -1;
    int segment_length = 0;
    Word label;
    std::vector<int> sector;
};

// letters on the darts leaving a partition point, as a bit set
using StarClass = std::uint32_t;
std::string star_string(StarClass c);

struct PartitionPoint {
    int level;
    int vertex;
    StarClass cls;
    std::vector<int> sector;
};

struct ExtensionChoice {
    Word offset;
    std::vector<Word> words;  // one per child, length ext_len
};

struct RoundTree {
    Presentation host;
    RoundTreeParams params;
    int base = 0;
    int depth = 0;
    std::vector<int> vertex_level;
    std::vector<RTEdge> edges;
    std::vector<RTCell> cells;
    std::vector<Sector> sectors;
    std::vector<Bracket> brackets;
    std::vector<PartitionPoint> partition_points;
    std::map<StarClass, ExtensionChoice> extensions;
    std::map<Word, Word> bracket_words;  // bracket label -> cell boundary word

    int num_vertices() const { return static_cast<int>(vertex_level.size()); }
    int tail(int dart) const;
    int head(int dart) const;
    Letter dart_label(int dart) const;
    std::vector<std::vector<int>> incidence() const;  // darts leaving each vertex
    // BFS distances in the 1-skeleton from v; -1 unreachable
    std::vector<int> distances(int v) const;
    // least-index vertex at that distance, walked back along least-index predecessors
    std::vector<int> geodesic_from_base(int length) const;
    std::vector<int> cell_vertices(int c) const;
    std::vector<int> sectors_at(int level) const;
    Word path_label(const std::vector<int>& vertices) const;
    nlohmann::json to_json() const;
};

RoundTree init_round_tree(const Presentation& p, RoundTreeParams params);
RoundTree grow_level(const RoundTree& tree);
RoundTree build_round_tree(const Presentation& p, const RoundTreeParams& params, int levels);

struct PlantedHost {
    Presentation host;
    RoundTree tree;  // the planted tree itself
};
// random labels on the round-tree geometry; cell words become the host relators
PlantedHost plant_round_tree_host(int m, int l, const RoundTreeParams& params, int levels, std::uint64_t seed);

// least rational d with floor((2m-1)^(dl)) == count
mpq_class density_for_count(int m, int l, long long count);

struct ExtensionWords {
    int k = 0;
    std::set<Word> words;
    std::map<int, std::set<Word>> per_vertex;
    std::size_t max_per_vertex = 0;
    std::size_t classes = 0;
    bool uniform = true;  // same class, same labels
    nlohmann::json to_json() const;
};
ExtensionWords extension_words(const RoundTree& tree, int k);

enum class EmanatingMode { Prefix, Subpath };

struct EmanatingSet {
    int k = 0;
    std::set<Word> words;
    double path_count = 0;
    double log_size = 0;   // log base (2m-1) of |words|
    double bound_log = 0;  // emanating bound, same base
    bool dominated = false;
    nlohmann::json to_json() const;
};
EmanatingSet enumerate_emanating(const RoundTree& tree, int k, EmanatingMode mode = EmanatingMode::Prefix,
                                 long long budget = 2'000'000);
int max_emanating_depth(const RoundTree& tree);

struct AxiomResult {
    std::string name;
    bool pass = true;
    std::string witness;
};

struct AxiomReport {
    std::vector<AxiomResult> results;
    bool all_pass() const;
    const AxiomResult& get(const std::string& name) const;
    nlohmann::json to_json() const;
};
AxiomReport check_round_tree_axioms(const RoundTree& tree);

enum class ProbeVerdict { Pass, Violation, Inconclusive };
std::string to_string(ProbeVerdict v);

struct GeodesicProbeReport {
    ProbeVerdict verdict = ProbeVerdict::Pass;
    int window = 0;
    int windows_checked = 0;
    int violation_start = -1;
    Word violation_word;
    int violation_distance = -1;
    bool certified = false;  // target verified C'(1/6)
    nlohmann::json to_json() const;
};
GeodesicProbeReport local_geodesic_probe(const RoundTree& tree, const std::vector<int>& path, int window,
                                         const Presentation& target, long long ball_budget = 200'000);

struct DistortionSample {
    int p, q;
    int rho_a;
    int rho_t;  // -1 inconclusive
    double ratio;
};

struct DistortionReport {
    int certified = 0;
    int inconclusive = 0;
    double max_ratio = 0;
    double mean_ratio = 0;
    std::map<std::string, int> histogram;  // ratio rounded to 1e-3
    std::vector<DistortionSample> samples;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};
DistortionReport distortion_probe(const RoundTree& tree, const Presentation& target, int radius, int samples,
                                  std::uint64_t seed, long long ball_budget = 200'000);

}  // namespace gromov
