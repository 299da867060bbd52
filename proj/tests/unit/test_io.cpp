#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "sensorsched/csv.hpp"
#include "sensorsched/network_io.hpp"

using namespace sensorsched;
using nlohmann::json;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "sensorsched_io_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("network files round-trip bit for bit") {
  const Matrix A = gen_tight(30, 5, 7.5, 3);
  const Topology topo = random_tree_topology(30, 3, 4, 3);
  const CostModel costs = default_costs(A, topo, 0.5);
  const SensorNetwork net(A, costs.s, Vector::LinSpaced(30, 0.0, 1.0), costs.C, topo);
  const auto path = temp_file("net.json");
  save_network(net, path);
  const SensorNetwork back = load_network(path);
  CHECK(back.A() == net.A());
  CHECK(back.s() == net.s());
  CHECK(back.e0() == net.e0());
  CHECK(back.C() == net.C());
  REQUIRE(back.topology().has_value());
  CHECK(back.topology()->parent == topo.parent);

  const auto again = temp_file("net2.json");
  save_network(back, again);
  CHECK(slurp(path) == slurp(again));
}

TEST_CASE("communication matrix input forms") {
  const json A = json::array({json::array({1.0, 0.0}), json::array({0.0, 1.0})});
  const json dense{{"A", A}, {"C", json::array({json::array({0.5, 0.0}), json::array({0.0, 0.25})})}};
  const json triplets{{"A", A}, {"C", json::array({json::array({0, 0, 0.5}), json::array({1, 1, 0.25})})}};
  const json wrapped{{"A", A}, {"C", {{"triplets", json::array({json::array({0, 0, 0.5}), json::array({1, 1, 0.25})})}}}};
  const Matrix a = network_from_json(dense).C();
  CHECK(a(0, 0) == 0.5);
  CHECK(a(1, 1) == 0.25);
  CHECK(network_from_json(triplets).C() == a);
  CHECK(network_from_json(wrapped).C() == a);
}

TEST_CASE("missing fields take their defaults") {
  const json doc{{"A", json::array({json::array({2.0, 0.0}), json::array({0.0, 1.0})})}};
  const SensorNetwork net = network_from_json(doc);
  CHECK(net.s()(0) == 4.0);
  CHECK(net.s()(1) == 1.0);
  CHECK(net.e0().isZero());
  CHECK(net.C().isZero());

  json star = doc;
  star["topology"] = {{"parent", json::array({-1, -1})}};
  const SensorNetwork routed = network_from_json(star, 0.5);
  CHECK(routed.C()(0, 0) == 2.0);
  CHECK(routed.C()(1, 1) == 0.5);
  CHECK(routed.C()(0, 1) == 0.0);
}

TEST_CASE("malformed network files are validation errors") {
  auto kind_of = [](const json& doc) {
    try {
      network_from_json(doc);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::DomainError;
  };
  CHECK(kind_of(json::object()) == ErrorKind::Validation);
  CHECK(kind_of(json{{"A", json::array({json::array({1.0}), json::array({1.0, 2.0})})}}) ==
        ErrorKind::Validation);
  CHECK(kind_of(json{{"A", json::array({json::array({1.0})})}, {"s", json::array({1.0, 2.0})}}) ==
        ErrorKind::Validation);
  CHECK(kind_of(json{{"A", json::array({json::array({1.0})})},
                     {"C", json::array({json::array({3, 0, 1.0})})}}) == ErrorKind::Validation);

  const auto path = temp_file("broken.json");
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_network(path), Error);
}

TEST_CASE("csv numbers keep 17 significant digits and the inf sentinel") {
  const double x = 0.1 + 0.2;
  CHECK(csv::parse(csv::format(x)) == x);
  CHECK(csv::format(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(csv::format(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(std::isinf(csv::parse("inf")));
  CHECK(csv::format(0.25) == "0.25");
  CHECK_THROWS_AS(csv::parse("1.0x"), Error);
  CHECK_THROWS_AS(csv::parse(""), Error);

  Matrix M(2, 3);
  M << 1.0 / 3.0, 0.0, 1.0, 2.0, 1e-300, -7.125;
  std::stringstream ss;
  csv::write_matrix(ss, M);
  std::stringstream in("# comment\n" + ss.str() + "\n");
  CHECK(csv::read_matrix(in) == M);

  std::stringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(csv::read_matrix(ragged), Error);
}
