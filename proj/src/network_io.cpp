#include "sensorsched/network_io.hpp"

#include <fstream>
#include <sstream>

namespace sensorsched {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& message) {
  throw Error(ErrorKind::Validation, "network file: " + message);
}

Vector read_vector(const json& node, Eigen::Index m, const char* name) {
  if (!node.is_array() || static_cast<Eigen::Index>(node.size()) != m) {
    bad(std::string(name) + " must be an array of length m");
  }
  Vector v(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& x = node[static_cast<std::size_t>(i)];
    if (!x.is_number()) bad(std::string(name) + " must hold numbers");
    v(i) = x.get<double>();
  }
  return v;
}

bool is_dense_square(const json& node, std::size_t m) {
  if (node.size() != m) return false;
  for (const auto& row : node) {
    if (!row.is_array() || row.size() != m) return false;
  }
  return true;
}

Matrix read_triplets(const json& list, int m) {
  Matrix C = Matrix::Zero(m, m);
  for (const auto& t : list) {
    if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() ||
        !t[1].is_number_integer() || !t[2].is_number()) {
      bad("C triplets must be [i, j, value]");
    }
    const int i = t[0].get<int>();
    const int j = t[1].get<int>();
    if (i < 0 || j < 0 || i >= m || j >= m) bad("C triplet index out of range");
    C(i, j) = t[2].get<double>();
  }
  return C;
}

Matrix read_comm(const json& node, int m) {
  if (node.is_object()) {
    if (!node.contains("triplets")) bad("C object must hold \"triplets\"");
    return read_triplets(node["triplets"], m);
  }
  if (!node.is_array()) bad("C must be an array or a triplet object");
  if (is_dense_square(node, static_cast<std::size_t>(m))) {
    Matrix C(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const auto& x = node[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (!x.is_number()) bad("C entries must be numbers");
        C(i, j) = x.get<double>();
      }
    }
    return C;
  }
  return read_triplets(node, m);
}

}  // namespace

SensorNetwork network_from_json(const json& doc, double commFraction) {
  if (!doc.is_object() || !doc.contains("A")) bad("missing field \"A\"");
  const json& rows = doc["A"];
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    bad("A must be a nonempty array of rows");
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto n = static_cast<Eigen::Index>(rows[0].size());
  Matrix A(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      bad("A rows must all have length n");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& x = row[static_cast<std::size_t>(j)];
      if (!x.is_number()) bad("A entries must be numbers");
      A(i, j) = x.get<double>();
    }
  }

  std::optional<Topology> topology;
  if (doc.contains("topology") && !doc["topology"].is_null()) {
    const json& t = doc["topology"];
    if (!t.contains("parent") || !t["parent"].is_array()) {
      bad("topology needs a \"parent\" array");
    }
    Topology topo;
    for (const auto& p : t["parent"]) {
      if (!p.is_number_integer()) bad("topology parents must be integers");
      topo.parent.push_back(p.get<int>());
    }
    if (t.contains("hop_cost") && !t["hop_cost"].is_null()) {
      for (const auto& c : t["hop_cost"]) {
        if (!c.is_number()) bad("hop_cost entries must be numbers");
        topo.hopCost.push_back(c.get<double>());
      }
    }
    topo.validate(static_cast<int>(m));
    topology = std::move(topo);
  }

  Vector s = doc.contains("s") ? read_vector(doc["s"], m, "s")
                               : Vector(A.rowwise().squaredNorm());
  Vector e0 = doc.contains("e0") ? read_vector(doc["e0"], m, "e0")
                                 : Vector(Vector::Zero(m));
  Matrix C;
  if (doc.contains("C") && !doc["C"].is_null()) {
    C = read_comm(doc["C"], static_cast<int>(m));
  } else if (topology && !topology->hopCost.empty()) {
    C = comm_matrix(*topology, s);
  } else if (topology) {
    C = comm_matrix(*topology, commFraction * s);
  } else {
    C = Matrix::Zero(m, m);
  }
  return SensorNetwork(std::move(A), std::move(s), std::move(e0), std::move(C),
                       std::move(topology));
}

json network_to_json(const SensorNetwork& network) {
  json doc;
  json rows = json::array();
  for (int i = 0; i < network.m(); ++i) {
    json row = json::array();
    for (int j = 0; j < network.n(); ++j) row.push_back(network.A()(i, j));
    rows.push_back(std::move(row));
  }
  doc["A"] = std::move(rows);
  doc["s"] = std::vector<double>(network.s().data(),
                                 network.s().data() + network.s().size());
  doc["e0"] = std::vector<double>(network.e0().data(),
                                  network.e0().data() + network.e0().size());
  if (const auto& topo = network.topology()) {
    json t;
    t["parent"] = topo->parent;
    if (!topo->hopCost.empty()) t["hop_cost"] = topo->hopCost;
    doc["topology"] = std::move(t);
  }
  json triplets = json::array();
  for (int i = 0; i < network.m(); ++i) {
    for (int j = 0; j < network.m(); ++j) {
      if (network.C()(i, j) != 0.0) {
        triplets.push_back(json::array({i, j, network.C()(i, j)}));
      }
    }
  }
  doc["C"] = json{{"triplets", std::move(triplets)}};
  return doc;
}

SensorNetwork load_network(const std::filesystem::path& path,
                           double commFraction) {
  std::ifstream in(path);
  if (!in) bad("cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    bad(std::string("parse error: ") + e.what());
  }
  return network_from_json(doc, commFraction);
}

void save_network(const SensorNetwork& network,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Validation, "cannot write " + path.string());
  out << network_to_json(network).dump(1) << '\n';
}

}  // namespace sensorsched
