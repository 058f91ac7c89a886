#include "ccn/coloring.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ccn/network_io.hpp"

namespace ccn {

using nlohmann::json;

// ---------------------------------------------------------------- Coloring --

int Coloring::n_colors() const {
  int m = -1;
  for (int c : color) m = std::max(m, c);
  return m + 1;
}

std::vector<std::vector<CellIndex>> Coloring::classes() const {
  std::vector<std::vector<CellIndex>> cls(n_colors());
  for (CellIndex c = 0; c < n_cells(); ++c) cls[color[c]].push_back(c);
  return cls;
}

void Coloring::canonicalize() {
  std::map<int, int> remap;
  for (int& c : color) {
    auto [it, fresh] = remap.emplace(c, static_cast<int>(remap.size()));
    (void)fresh;
    c = it->second;
  }
}

Coloring trivial_coloring(const TypedNetwork& net) {
  Coloring col;
  col.color.resize(net.n_cells());
  for (CellIndex c = 0; c < net.n_cells(); ++c) col.color[c] = c;
  return col;
}

Coloring merge_cells(const TypedNetwork& net,
                     const std::vector<std::vector<std::string>>& groups) {
  Coloring col = trivial_coloring(net);
  for (const auto& group : groups) {
    if (group.empty()) continue;
    auto first = net.find_cell(group.front());
    if (!first) throw std::invalid_argument("merge_cells: unknown cell id");
    for (const auto& id : group) {
      auto c = net.find_cell(id);
      if (!c) throw std::invalid_argument("merge_cells: unknown cell id");
      col.color[*c] = col.color[*first];
    }
  }
  col.canonicalize();
  return col;
}

std::string to_string(const TypedNetwork& net, const Coloring& col) {
  std::ostringstream os;
  bool outer = false;
  for (const auto& cls : col.classes()) {
    os << (outer ? " {" : "{");
    outer = true;
    bool inner = false;
    for (CellIndex c : cls) {
      os << (inner ? " " : "") << net.cell(c).id;
      inner = true;
    }
    os << "}";
  }
  return os.str();
}

Coloring read_coloring(const TypedNetwork& net, const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw FormatError("coloring: malformed JSON");
  if (!j.is_object() || j.size() != 1 || !j.contains("colors") ||
      !j.at("colors").is_object())
    throw FormatError("coloring: expected exactly {\"colors\": {...}}");
  Coloring col;
  col.color.assign(net.n_cells(), -1);
  for (const auto& [id, v] : j.at("colors").items()) {
    auto c = net.find_cell(id);
    if (!c) throw FormatError("coloring: unknown cell '" + id + "'");
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw FormatError("coloring: color of '" + id +
                        "' must be a nonnegative integer");
    col.color[*c] = static_cast<int>(v.get<long long>());
  }
  for (CellIndex c = 0; c < net.n_cells(); ++c)
    if (col.color[c] < 0)
      throw FormatError("coloring: cell '" + net.cell(c).id + "' is missing");
  col.canonicalize();
  return col;
}

std::string write_coloring(const TypedNetwork& net, const Coloring& col) {
  json colors = json::object();
  for (CellIndex c = 0; c < net.n_cells(); ++c)
    colors[net.cell(c).id] = col.color[c];
  json j;
  j["colors"] = colors;
  return j.dump(2) + "\n";
}

bool is_finer(const Coloring& a, const Coloring& b) {
  if (a.n_cells() != b.n_cells())
    throw std::invalid_argument("is_finer: colorings over different cell sets");
  std::map<int, int> image;
  for (int c = 0; c < a.n_cells(); ++c) {
    auto [it, fresh] = image.emplace(a.color[c], b.color[c]);
    if (!fresh && it->second != b.color[c]) return false;
  }
  return true;
}

// ------------------------------------------------------------ balancedness --

namespace {

/// First color-preserving input isomorphism (c -> c2) in lexicographic image
/// order, or nullopt. Candidates must match arrow type and tail color.
std::optional<InputIsomorphism> color_preserving_iso(const TypedNetwork& net,
                                                     const Coloring& col,
                                                     CellIndex c,
                                                     CellIndex c2) {
  const auto& src = net.input_arrows(c);
  std::vector<ArrowIndex> dst = net.input_arrows(c2);
  std::sort(dst.begin(), dst.end());
  const int p = static_cast<int>(src.size());
  if (static_cast<int>(dst.size()) != p) return std::nullopt;

  std::vector<ArrowIndex> image(p, -1);
  std::vector<bool> used(dst.size(), false);
  auto rec = [&](auto&& self, int pos) -> bool {
    if (pos == p) return true;
    const Arrow& want = net.arrow(src[pos]);
    for (std::size_t j = 0; j < dst.size(); ++j) {
      if (used[j]) continue;
      const Arrow& cand = net.arrow(dst[j]);
      if (cand.type != want.type) continue;
      if (col.color.at(cand.tail) != col.color.at(want.tail)) continue;
      used[j] = true;
      image[pos] = dst[j];
      if (self(self, pos + 1)) return true;
      used[j] = false;
    }
    return false;
  };
  if (!rec(rec, 0)) return std::nullopt;
  InputIsomorphism iso;
  iso.source = c;
  iso.target = c2;
  for (int i = 0; i < p; ++i) iso.map.emplace_back(src[i], image[i]);
  return iso;
}

}  // namespace

BalancednessCertificate is_balanced(const TypedNetwork& net,
                                    const Coloring& col) {
  if (col.n_cells() != net.n_cells())
    throw std::invalid_argument("is_balanced: coloring size mismatch");
  BalancednessCertificate cert;
  for (const auto& cls : col.classes()) {
    for (std::size_t i = 1; i < cls.size(); ++i) {
      if (net.cell(cls[i]).type != net.cell(cls[0]).type) {
        cert.balanced = false;
        cert.reason = BalancednessCertificate::Reason::type_mismatch;
        cert.witness_a = cls[0];
        cert.witness_b = cls[i];
        cert.isos.clear();
        return cert;
      }
    }
    for (CellIndex a : cls) {
      for (CellIndex b : cls) {
        if (a == b) continue;
        auto iso = color_preserving_iso(net, col, a, b);
        if (!iso) {
          cert.balanced = false;
          cert.reason =
              BalancednessCertificate::Reason::no_color_preserving_iso;
          cert.witness_a = a;
          cert.witness_b = b;
          cert.isos.clear();
          return cert;
        }
        cert.isos.push_back(std::move(*iso));
      }
    }
  }
  cert.balanced = true;
  return cert;
}

bool has_color_preserving_iso(const TypedNetwork& net, const Coloring& col,
                              CellIndex a, CellIndex b) {
  if (col.n_cells() != net.n_cells())
    throw std::invalid_argument("has_color_preserving_iso: size mismatch");
  return color_preserving_iso(net, col, a, b).has_value();
}

// ------------------------------------------------------------- refinement --

Coloring balanced_refinement(const TypedNetwork& net, Coloring seed) {
  if (seed.n_cells() != net.n_cells())
    throw std::invalid_argument("balanced_refinement: size mismatch");
  seed.canonicalize();
  for (;;) {
    // Signature: cell type plus sorted (arrow type, tail color) multiset of
    // the user input arrows. Internal arrows never split a class (their tail
    // color is the cell's own color) and are skipped.
    using Sig = std::pair<int, std::vector<std::pair<int, int>>>;
    std::map<std::pair<int, Sig>, int> groups;
    Coloring next;
    next.color.resize(net.n_cells());
    for (CellIndex c = 0; c < net.n_cells(); ++c) {
      Sig sig;
      sig.first = net.cell(c).type;
      for (ArrowIndex a : net.input_arrows(c)) {
        if (net.arrow(a).internal) continue;
        sig.second.emplace_back(net.arrow(a).type,
                                seed.color[net.arrow(a).tail]);
      }
      std::sort(sig.second.begin(), sig.second.end());
      auto key = std::make_pair(seed.color[c], std::move(sig));
      auto [it, fresh] =
          groups.emplace(std::move(key), static_cast<int>(groups.size()));
      (void)fresh;
      next.color[c] = it->second;
    }
    next.canonicalize();
    if (next.n_colors() == seed.n_colors()) return seed;
    seed = std::move(next);
  }
}

// ------------------------------------------------------------- enumeration --

std::vector<Coloring> enumerate_balanced(const TypedNetwork& net,
                                         int max_cells) {
  if (net.n_cells() > max_cells)
    throw std::invalid_argument(
        "enumerate_balanced: cell count exceeds the configured cap");

  Coloring by_type;
  by_type.color.resize(net.n_cells());
  for (CellIndex c = 0; c < net.n_cells(); ++c)
    by_type.color[c] = net.cell(c).type;
  by_type.canonicalize();

  std::set<Coloring> found;
  std::set<Coloring> seeds_done;
  std::queue<Coloring> work;

  Coloring top = balanced_refinement(net, by_type);
  found.insert(top);
  work.push(top);

  while (!work.empty()) {
    Coloring cur = std::move(work.front());
    work.pop();
    for (const auto& cls : cur.classes()) {
      const int k = static_cast<int>(cls.size());
      if (k < 2) continue;
      // Every two-part split of one class; the first member stays in part 0,
      // so each unordered split appears once.
      for (unsigned mask = 1; mask < (1u << (k - 1)); ++mask) {
        Coloring seed = cur;
        const int fresh = seed.n_colors();
        for (int i = 1; i < k; ++i)
          if (mask & (1u << (i - 1))) seed.color[cls[i]] = fresh;
        seed.canonicalize();
        if (!seeds_done.insert(seed).second) continue;
        Coloring r = balanced_refinement(net, seed);
        if (found.insert(r).second) work.push(r);
      }
    }
  }
  return {found.begin(), found.end()};
}

std::vector<Coloring> brute_force_balanced(const TypedNetwork& net) {
  if (net.n_cells() > 10)
    throw std::invalid_argument("brute_force_balanced: more than 10 cells");

  // Cells per type; a partition respects types iff it is a product of
  // per-type partitions. Each per-type partition is enumerated as a
  // restricted growth string.
  std::vector<std::vector<CellIndex>> per_type(net.n_cell_types());
  for (CellIndex c = 0; c < net.n_cells(); ++c)
    per_type[net.cell(c).type].push_back(c);

  std::vector<std::vector<std::vector<int>>> type_partitions(
      net.n_cell_types());
  for (int t = 0; t < net.n_cell_types(); ++t) {
    const int m = static_cast<int>(per_type[t].size());
    std::vector<int> rgs(std::max(m, 0), 0);
    auto rec = [&](auto&& self, int i, int maxv) -> void {
      if (i == m) {
        type_partitions[t].push_back(rgs);
        return;
      }
      for (int b = 0; b <= maxv + 1; ++b) {
        rgs[i] = b;
        self(self, i + 1, std::max(maxv, b));
      }
    };
    if (m == 0)
      type_partitions[t].push_back({});
    else
      rec(rec, 0, -1);
  }

  std::vector<Coloring> out;
  std::vector<int> pick(net.n_cell_types(), 0);
  auto emit = [&] {
    Coloring col;
    col.color.assign(net.n_cells(), 0);
    int base = 0;
    for (int t = 0; t < net.n_cell_types(); ++t) {
      const auto& rgs = type_partitions[t][pick[t]];
      int blocks = 0;
      for (std::size_t i = 0; i < rgs.size(); ++i) {
        col.color[per_type[t][i]] = base + rgs[i];
        blocks = std::max(blocks, rgs[i] + 1);
      }
      base += blocks;
    }
    col.canonicalize();
    if (is_balanced(net, col).balanced) out.push_back(std::move(col));
  };
  auto rec = [&](auto&& self, int t) -> void {
    if (t == net.n_cell_types()) {
      emit();
      return;
    }
    for (std::size_t i = 0; i < type_partitions[t].size(); ++i) {
      pick[t] = static_cast<int>(i);
      self(self, t + 1);
    }
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end());
  return out;
}

// -------------------------------------------------------- synchrony space --

bool in_synchrony_space(const TypedNetwork& net, const Coloring& col,
                        const Vec& x, double tol) {
  if (x.size() != net.state_dim())
    throw std::invalid_argument("in_synchrony_space: state dimension mismatch");
  if (col.n_cells() != net.n_cells())
    throw std::invalid_argument("in_synchrony_space: coloring size mismatch");
  for (CellIndex a = 0; a < net.n_cells(); ++a) {
    for (CellIndex b = a + 1; b < net.n_cells(); ++b) {
      if (col.same(a, b)) {
        if (net.cell_dim(a) != net.cell_dim(b))
          throw std::invalid_argument(
              "in_synchrony_space: same-color cells with unequal dimensions");
        if (net.cell_distance(x, a, b) > tol) return false;
      } else if (net.cell_dim(a) == net.cell_dim(b)) {
        // The pattern is an equivalence: different colors require genuine
        // separation, beyond the ambiguity band.
        if (net.cell_distance(x, a, b) <= 10.0 * tol) return false;
      }
    }
  }
  return true;
}

Vec synchrony_point(const TypedNetwork& net, const Coloring& col,
                    const std::vector<Vec>& per_color) {
  if (static_cast<int>(per_color.size()) != col.n_colors())
    throw std::invalid_argument("synchrony_point: one block per color needed");
  Vec x = Vec::Zero(net.state_dim());
  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    const Vec& block = per_color[col.color[c]];
    if (block.size() != net.cell_dim(c))
      throw std::invalid_argument("synchrony_point: block dimension mismatch");
    net.cell_state(x, c) = block;
  }
  return x;
}

// ---------------------------------------------------------------- quotient --

QuotientNetwork quotient_network(const TypedNetwork& net, const Coloring& col) {
  BalancednessCertificate cert = is_balanced(net, col);
  if (!cert.balanced)
    throw std::invalid_argument(
        "quotient_network: coloring is not balanced");

  QuotientNetwork q;
  q.coloring = col;
  const auto classes = col.classes();
  q.rep.resize(classes.size());
  for (std::size_t k = 0; k < classes.size(); ++k) q.rep[k] = classes[k][0];
  q.cell_color.resize(net.n_cells());
  for (CellIndex c = 0; c < net.n_cells(); ++c) q.cell_color[c] = col.color[c];

  NetworkSpec raw;
  for (int t = 0; t < net.n_cell_types(); ++t)
    raw.cell_type(net.cell_type(t).id, net.cell_type(t).dim);
  for (int t = 0; t < net.n_arrow_types(false); ++t)
    raw.arrow_type(net.arrow_type_id(t));
  for (CellIndex r : q.rep)
    raw.cell(net.cell(r).id, net.cell_type(net.cell(r).type).id);
  // The representative keeps its input arrows; tails move to the
  // representative of the tail's color. Input sets of distinct
  // representatives are disjoint, so arrow ids stay unique.
  for (CellIndex r : q.rep) {
    for (ArrowIndex a : net.input_arrows(r)) {
      const Arrow& ar = net.arrow(a);
      if (ar.internal) continue;
      raw.arrow(ar.id, net.arrow_type_id(ar.type),
                net.cell(q.rep[col.color[ar.tail]]).id, net.cell(r).id);
    }
  }
  q.net = make_validated(raw);
  return q;
}

Vec QuotientNetwork::project(const TypedNetwork& full, const Vec& x) const {
  Vec out = Vec::Zero(net.state_dim());
  for (int k = 0; k < static_cast<int>(rep.size()); ++k)
    net.cell_state(out, k) = full.cell_state(x, rep[k]);
  return out;
}

Vec QuotientNetwork::lift(const TypedNetwork& full, const Vec& q) const {
  Vec out = Vec::Zero(full.state_dim());
  for (CellIndex c = 0; c < full.n_cells(); ++c)
    full.cell_state(out, c) = net.cell_state(q, cell_color[c]);
  return out;
}

}  // namespace ccn
