#include "ccn/network.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace ccn {

// ----------------------------------------------------------------- builder --

NetworkSpec& NetworkSpec::cell_type(std::string id, long long dim) {
  cell_types.push_back({std::move(id), dim});
  return *this;
}
NetworkSpec& NetworkSpec::arrow_type(std::string id) {
  arrow_types.push_back(std::move(id));
  return *this;
}
NetworkSpec& NetworkSpec::cell(std::string id, std::string type) {
  cells.push_back({std::move(id), std::move(type)});
  return *this;
}
NetworkSpec& NetworkSpec::arrow(std::string id, std::string type,
                                std::string tail, std::string head) {
  arrows.push_back({std::move(id), std::move(type), std::move(tail),
                    std::move(head)});
  return *this;
}

// ------------------------------------------------------------- validation --

namespace {

bool is_reserved(std::string_view id) {
  return id.substr(0, kInternalPrefix.size()) == kInternalPrefix;
}

void check_id(std::vector<Violation>& out, std::string_view what,
              const std::string& id) {
  if (id.empty()) {
    out.push_back({"empty-id", std::string(what) + " with empty id", {}});
  } else if (is_reserved(id)) {
    out.push_back({"reserved-id",
                   std::string(what) + " id uses the reserved prefix",
                   {id}});
  }
}

}  // namespace

ValidationReport validate_network(const NetworkSpec& raw) {
  ValidationReport report;
  auto& out = report.violations;

  std::unordered_map<std::string, int> type_ix, atype_ix, cell_ix;
  std::unordered_set<std::string> arrow_ids;

  for (const auto& t : raw.cell_types) {
    check_id(out, "cell type", t.id);
    if (!type_ix.emplace(t.id, static_cast<int>(type_ix.size())).second)
      out.push_back({"duplicate-id", "duplicate cell type id", {t.id}});
    if (t.dim < 1 || t.dim > 1'000'000)
      out.push_back({"bad-dimension",
                     "cell type dimension must be a positive integer",
                     {t.id}});
  }
  for (const auto& t : raw.arrow_types) {
    check_id(out, "arrow type", t);
    if (!atype_ix.emplace(t, static_cast<int>(atype_ix.size())).second)
      out.push_back({"duplicate-id", "duplicate arrow type id", {t}});
  }
  for (const auto& c : raw.cells) {
    check_id(out, "cell", c.id);
    if (!cell_ix.emplace(c.id, static_cast<int>(cell_ix.size())).second)
      out.push_back({"duplicate-id", "duplicate cell id", {c.id}});
    if (!type_ix.count(c.type))
      out.push_back({"unknown-cell-type", "cell references unknown cell type",
                     {c.id, c.type}});
  }
  for (const auto& a : raw.arrows) {
    check_id(out, "arrow", a.id);
    if (!arrow_ids.insert(a.id).second)
      out.push_back({"duplicate-id", "duplicate arrow id", {a.id}});
    if (!atype_ix.count(a.type))
      out.push_back({"unknown-arrow-type",
                     "arrow references unknown arrow type",
                     {a.id, a.type}});
    if (!cell_ix.count(a.tail))
      out.push_back({"unknown-cell", "arrow tail references missing cell",
                     {a.id, a.tail}});
    if (!cell_ix.count(a.head))
      out.push_back({"unknown-cell", "arrow head references missing cell",
                     {a.id, a.head}});
  }
  if (!out.empty()) return report;

  // Arrow-type compatibility: one (head type, tail type) signature per type.
  std::unordered_map<int, std::pair<int, int>> sig;
  for (const auto& a : raw.arrows) {
    int at = atype_ix.at(a.type);
    int ht = type_ix.at(raw.cells[cell_ix.at(a.head)].type);
    int tt = type_ix.at(raw.cells[cell_ix.at(a.tail)].type);
    auto [it, fresh] = sig.emplace(at, std::make_pair(ht, tt));
    if (!fresh && it->second != std::make_pair(ht, tt)) {
      out.push_back({"type-compatibility",
                     "arrows of one type must connect equal cell types",
                     {a.id, a.type}});
    }
  }
  if (!out.empty()) return report;

  // Assemble the validated network.
  TypedNetwork net;
  for (const auto& t : raw.cell_types)
    net.cell_types_.push_back({t.id, static_cast<int>(t.dim)});
  net.arrow_types_ = raw.arrow_types;
  net.n_user_arrow_types_ = static_cast<int>(raw.arrow_types.size());
  for (const auto& c : raw.cells)
    net.cells_.push_back({c.id, type_ix.at(c.type)});
  for (const auto& a : raw.arrows)
    net.arrows_.push_back({a.id, atype_ix.at(a.type),
                           static_cast<CellIndex>(cell_ix.at(a.tail)),
                           static_cast<CellIndex>(cell_ix.at(a.head)), false});
  net.n_user_arrows_ = static_cast<int>(raw.arrows.size());

  // Implicit self-dependence: one internal self-arrow per cell, with a
  // reserved arrow type unique per cell type. This makes the dependence of a
  // cell on its own state uniform with its other inputs, and it pins input
  // isomorphisms to same-type cells even when no user arrows exist.
  std::vector<int> internal_type(net.cell_types_.size(), -1);
  for (int t = 0; t < static_cast<int>(net.cell_types_.size()); ++t) {
    internal_type[t] = static_cast<int>(net.arrow_types_.size());
    net.arrow_types_.push_back(std::string(kInternalPrefix) +
                               net.cell_types_[t].id);
  }
  net.internal_arrow_.resize(net.cells_.size());
  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    net.internal_arrow_[c] = static_cast<ArrowIndex>(net.arrows_.size());
    net.arrows_.push_back({std::string(kInternalPrefix) + net.cells_[c].id,
                           internal_type[net.cells_[c].type], c, c, true});
  }

  // Canonical input lists: user arrows in declaration order, internal last.
  net.input_arrows_.resize(net.cells_.size());
  for (ArrowIndex a = 0; a < net.n_arrows(false); ++a)
    net.input_arrows_[net.arrows_[a].head].push_back(a);
  for (CellIndex c = 0; c < net.n_cells(); ++c)
    net.input_arrows_[c].push_back(net.internal_arrow_[c]);

  net.offsets_.resize(net.cells_.size());
  int off = 0;
  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    net.offsets_[c] = off;
    off += net.cell_dim(c);
  }
  net.state_dim_ = off;

  report.network = std::move(net);
  return report;
}

TypedNetwork make_validated(const NetworkSpec& raw) {
  ValidationReport r = validate_network(raw);
  if (!r.valid()) {
    std::ostringstream os;
    os << "invalid network:";
    for (const auto& v : r.violations) {
      os << " [" << v.code << "] " << v.message;
      for (const auto& id : v.ids) os << " '" << id << "'";
      os << ";";
    }
    throw std::invalid_argument(os.str());
  }
  return std::move(*r.network);
}

// ---------------------------------------------------------------- lookups --

std::optional<CellIndex> TypedNetwork::find_cell(std::string_view id) const {
  for (CellIndex c = 0; c < n_cells(); ++c)
    if (cells_[c].id == id) return c;
  return std::nullopt;
}
std::optional<ArrowIndex> TypedNetwork::find_arrow(std::string_view id) const {
  for (ArrowIndex a = 0; a < static_cast<ArrowIndex>(arrows_.size()); ++a)
    if (arrows_[a].id == id) return a;
  return std::nullopt;
}
std::optional<int> TypedNetwork::find_arrow_type(std::string_view id) const {
  for (int t = 0; t < static_cast<int>(arrow_types_.size()); ++t)
    if (arrow_types_[t] == id) return t;
  return std::nullopt;
}
std::optional<int> TypedNetwork::find_cell_type(std::string_view id) const {
  for (int t = 0; t < static_cast<int>(cell_types_.size()); ++t)
    if (cell_types_[t].id == id) return t;
  return std::nullopt;
}

double TypedNetwork::cell_distance(const Vec& x, CellIndex a,
                                   CellIndex b) const {
  if (cell_dim(a) != cell_dim(b))
    throw std::invalid_argument("cell_distance: dimension mismatch");
  return (cell_state(x, a) - cell_state(x, b)).cwiseAbs().maxCoeff();
}

// ------------------------------------------------------------- input sets --

InputSet inputs(const TypedNetwork& net, CellIndex c, bool include_internal) {
  if (c < 0 || c >= net.n_cells())
    throw std::invalid_argument("inputs: unknown cell index");
  InputSet s;
  s.cell = c;
  for (ArrowIndex a : net.input_arrows(c))
    if (include_internal || !net.arrow(a).internal) s.arrows.push_back(a);
  return s;
}

// ---------------------------------------------------- input isomorphisms --

ArrowIndex InputIsomorphism::image(ArrowIndex a) const {
  for (const auto& [s, t] : map)
    if (s == a) return t;
  throw std::invalid_argument("InputIsomorphism::image: arrow not in domain");
}

InputIsomorphism InputIsomorphism::after(const InputIsomorphism& first) const {
  if (first.target != source)
    throw std::invalid_argument("InputIsomorphism::after: domains disagree");
  InputIsomorphism r;
  r.source = first.source;
  r.target = target;
  for (const auto& [a, b] : first.map) r.map.emplace_back(a, image(b));
  return r;
}

InputIsomorphism InputIsomorphism::inverse() const {
  InputIsomorphism r;
  r.source = target;
  r.target = source;
  r.map.reserve(map.size());
  for (const auto& [a, b] : map) r.map.emplace_back(b, a);
  std::sort(r.map.begin(), r.map.end());
  return r;
}

bool input_isomorphic(const TypedNetwork& net, CellIndex c, CellIndex c2) {
  if (net.cell(c).type != net.cell(c2).type) return false;
  std::map<int, int> counts;
  for (ArrowIndex a : net.input_arrows(c)) ++counts[net.arrow(a).type];
  for (ArrowIndex a : net.input_arrows(c2)) --counts[net.arrow(a).type];
  for (const auto& [t, n] : counts)
    if (n != 0) return false;
  return true;
}

std::vector<InputIsomorphism> input_isomorphisms(const TypedNetwork& net,
                                                 CellIndex c, CellIndex c2) {
  if (c < 0 || c >= net.n_cells() || c2 < 0 || c2 >= net.n_cells())
    throw std::invalid_argument("input_isomorphisms: unknown cell index");
  std::vector<InputIsomorphism> result;
  if (!input_isomorphic(net, c, c2)) return result;

  const auto& src = net.input_arrows(c);
  const auto& dst = net.input_arrows(c2);
  const int p = static_cast<int>(src.size());

  // Backtracking over positions of I(c) in canonical order, always choosing
  // the smallest unused type-compatible target arrow first. This yields the
  // isomorphisms in lexicographic order of the image sequence.
  std::vector<ArrowIndex> image(p, -1);
  std::vector<bool> used(dst.size(), false);
  std::vector<ArrowIndex> dst_sorted(dst);
  std::sort(dst_sorted.begin(), dst_sorted.end());

  auto emit = [&] {
    InputIsomorphism iso;
    iso.source = c;
    iso.target = c2;
    for (int i = 0; i < p; ++i) iso.map.emplace_back(src[i], image[i]);
    result.push_back(std::move(iso));
  };

  // used[] is indexed against dst_sorted.
  auto rec = [&](auto&& self, int pos) -> void {
    if (pos == p) {
      emit();
      return;
    }
    const int want = net.arrow(src[pos]).type;
    for (std::size_t j = 0; j < dst_sorted.size(); ++j) {
      if (used[j] || net.arrow(dst_sorted[j]).type != want) continue;
      used[j] = true;
      image[pos] = dst_sorted[j];
      self(self, pos + 1);
      used[j] = false;
    }
  };
  rec(rec, 0);
  return result;
}

std::vector<std::vector<CellIndex>> input_isomorphism_classes(
    const TypedNetwork& net) {
  std::vector<std::vector<CellIndex>> classes;
  std::vector<int> assigned(net.n_cells(), -1);
  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    if (assigned[c] >= 0) continue;
    const int k = static_cast<int>(classes.size());
    classes.push_back({c});
    assigned[c] = k;
    for (CellIndex d = c + 1; d < net.n_cells(); ++d)
      if (assigned[d] < 0 && input_isomorphic(net, c, d)) {
        classes[k].push_back(d);
        assigned[d] = k;
      }
  }
  return classes;
}

// ---------------------------------------------------------------- pullback --

std::vector<Vec> pullback(const TypedNetwork& net, const InputIsomorphism& beta,
                          const Vec& x) {
  if (x.size() != net.state_dim())
    throw std::invalid_argument("pullback: state dimension mismatch");
  std::vector<Vec> out;
  for (const auto& [a, b] : beta.map) {
    if (net.arrow(a).internal) continue;
    out.emplace_back(net.cell_state(x, net.arrow(b).tail));
  }
  return out;
}

// ---------------------------------------------------------------- doubling --

DoubledNetwork doubled_network(const TypedNetwork& net) {
  for (CellIndex c = 0; c < net.n_cells(); ++c)
    if (net.cell(c).id.find('#') != std::string::npos)
      throw std::invalid_argument("cell id '" + net.cell(c).id +
                                  "' contains '#', reserved for copy suffixes");

  NetworkSpec raw;
  for (int t = 0; t < net.n_cell_types(); ++t)
    raw.cell_type(net.cell_type(t).id, net.cell_type(t).dim);
  for (int t = 0; t < net.n_arrow_types(false); ++t)
    raw.arrow_type(net.arrow_type_id(t));
  for (const char* suffix : {"#1", "#2"})
    for (CellIndex c = 0; c < net.n_cells(); ++c)
      raw.cell(net.cell(c).id + suffix,
               net.cell_type(net.cell(c).type).id);
  for (const char* suffix : {"#1", "#2"})
    for (ArrowIndex a = 0; a < net.n_arrows(false); ++a) {
      const Arrow& ar = net.arrow(a);
      raw.arrow(ar.id + suffix, net.arrow_type_id(ar.type),
                net.cell(ar.tail).id + suffix, net.cell(ar.head).id + suffix);
    }

  DoubledNetwork d;
  d.net = make_validated(raw);
  const int n = net.n_cells();
  d.copy1.resize(n);
  d.copy2.resize(n);
  for (CellIndex c = 0; c < n; ++c) {
    d.copy1[c] = c;
    d.copy2[c] = c + n;
  }
  return d;
}

}  // namespace ccn
