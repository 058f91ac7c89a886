#include "ccn/network_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ccn {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw FormatError("malformed JSON");
  return j;
}

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const char* where) {
  if (!obj.is_object())
    throw FormatError(std::string(where) + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : allowed) ok = ok || key == k;
    if (!ok)
      throw FormatError(std::string(where) + ": unknown field '" + key + "'");
  }
}

std::string get_string(const json& obj, const char* key, const char* where) {
  if (!obj.contains(key))
    throw FormatError(std::string(where) + ": missing field '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_string())
    throw FormatError(std::string(where) + ": field '" + key +
                      "' must be a string");
  std::string s = v.get<std::string>();
  if (s.empty())
    throw FormatError(std::string(where) + ": field '" + key +
                      "' must be nonempty");
  return s;
}

}  // namespace

NetworkSpec read_network_spec(const std::string& text) {
  json j = parse(text);
  require_keys(j, {"version", "cell_types", "arrow_types", "cells", "arrows"},
               "network");
  if (!j.contains("version") || !j.at("version").is_number_integer() ||
      j.at("version").get<long long>() != 1)
    throw FormatError("network: unsupported or missing version (expected 1)");
  for (const char* key : {"cell_types", "arrow_types", "cells", "arrows"})
    if (!j.contains(key) || !j.at(key).is_array())
      throw FormatError(std::string("network: field '") + key +
                        "' must be an array");

  NetworkSpec spec;
  for (const json& t : j.at("cell_types")) {
    require_keys(t, {"id", "dim"}, "cell_types entry");
    if (!t.contains("dim") || !t.at("dim").is_number_integer())
      throw FormatError("cell_types entry: 'dim' must be an integer");
    spec.cell_type(get_string(t, "id", "cell_types entry"),
                   t.at("dim").get<long long>());
  }
  for (const json& t : j.at("arrow_types")) {
    if (!t.is_string() || t.get<std::string>().empty())
      throw FormatError("arrow_types entries must be nonempty strings");
    spec.arrow_type(t.get<std::string>());
  }
  for (const json& c : j.at("cells")) {
    require_keys(c, {"id", "type"}, "cells entry");
    spec.cell(get_string(c, "id", "cells entry"),
              get_string(c, "type", "cells entry"));
  }
  for (const json& a : j.at("arrows")) {
    require_keys(a, {"id", "type", "tail", "head"}, "arrows entry");
    spec.arrow(get_string(a, "id", "arrows entry"),
               get_string(a, "type", "arrows entry"),
               get_string(a, "tail", "arrows entry"),
               get_string(a, "head", "arrows entry"));
  }
  return spec;
}

NetworkSpec read_network_file(const std::string& path) {
  return read_network_spec(slurp_file(path));
}

std::string write_network(const TypedNetwork& net) {
  json j;
  j["version"] = 1;
  j["cell_types"] = json::array();
  for (int t = 0; t < net.n_cell_types(); ++t)
    j["cell_types"].push_back(
        {{"id", net.cell_type(t).id}, {"dim", net.cell_type(t).dim}});
  j["arrow_types"] = json::array();
  for (int t = 0; t < net.n_arrow_types(false); ++t)
    j["arrow_types"].push_back(net.arrow_type_id(t));
  j["cells"] = json::array();
  for (CellIndex c = 0; c < net.n_cells(); ++c)
    j["cells"].push_back({{"id", net.cell(c).id},
                          {"type", net.cell_type(net.cell(c).type).id}});
  j["arrows"] = json::array();
  for (ArrowIndex a = 0; a < net.n_arrows(false); ++a) {
    const Arrow& ar = net.arrow(a);
    j["arrows"].push_back({{"id", ar.id},
                           {"type", net.arrow_type_id(ar.type)},
                           {"tail", net.cell(ar.tail).id},
                           {"head", net.cell(ar.head).id}});
  }
  return j.dump(2) + "\n";
}

Vec read_state(const TypedNetwork& net, const std::string& text) {
  json j = parse(text);
  require_keys(j, {"state"}, "state document");
  if (!j.contains("state") || !j.at("state").is_object())
    throw FormatError("state document: missing 'state' object");
  const json& st = j.at("state");

  Vec x = Vec::Zero(net.state_dim());
  std::vector<bool> seen(net.n_cells(), false);
  for (const auto& [id, value] : st.items()) {
    auto c = net.find_cell(id);
    if (!c) throw FormatError("state: unknown cell '" + id + "'");
    seen[*c] = true;
    const int d = net.cell_dim(*c);
    if (value.is_number()) {
      if (d != 1)
        throw FormatError("state: cell '" + id + "' needs " +
                          std::to_string(d) + " components");
      x[net.cell_offset(*c)] = value.get<double>();
    } else if (value.is_array()) {
      if (static_cast<int>(value.size()) != d)
        throw FormatError("state: cell '" + id + "' needs " +
                          std::to_string(d) + " components");
      for (int k = 0; k < d; ++k) {
        if (!value.at(k).is_number())
          throw FormatError("state: cell '" + id + "' has a non-number entry");
        x[net.cell_offset(*c) + k] = value.at(k).get<double>();
      }
    } else {
      throw FormatError("state: cell '" + id +
                        "' must map to a number or an array");
    }
  }
  for (CellIndex c = 0; c < net.n_cells(); ++c)
    if (!seen[c])
      throw FormatError("state: cell '" + net.cell(c).id + "' is missing");
  return x;
}

Vec read_state_file(const TypedNetwork& net, const std::string& path) {
  return read_state(net, slurp_file(path));
}

std::string write_state(const TypedNetwork& net, const Vec& x) {
  json st = json::object();
  for (CellIndex c = 0; c < net.n_cells(); ++c) {
    json arr = json::array();
    for (int k = 0; k < net.cell_dim(c); ++k)
      arr.push_back(x[net.cell_offset(c) + k]);
    st[net.cell(c).id] = arr;
  }
  json j;
  j["state"] = st;
  return j.dump(2) + "\n";
}

std::string slurp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace ccn
