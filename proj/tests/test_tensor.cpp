#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "kgalign/gradcheck.hpp"
#include "kgalign/tensor.hpp"

using kgalign::Rng;
using kgalign::ad::Tape;
using kgalign::ad::Tensor;

namespace {

Tensor<double> random_tensor(std::size_t r, std::size_t c, Rng& rng, bool rg = true) {
  auto t = Tensor<double>::zeros(r, c, rg);
  for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

}  // namespace

TEST_CASE("matmul identity and hand arithmetic") {
  Tape<double> tape;
  auto id2 = Tensor<double>::from_data(2, 2, {1, 0, 0, 1});
  auto m = Tensor<double>::from_data(2, 2, {3, -1, 2, 7});
  auto prod = tape.matmul(id2, m);
  CHECK(prod.values() == m.values());

  auto a = Tensor<double>::from_data(2, 2, {1, 2, 3, 4});
  auto ones = Tensor<double>::from_data(2, 1, {1, 1});
  auto v = tape.matmul(a, ones);
  CHECK(v.at(0, 0) == doctest::Approx(3));
  CHECK(v.at(1, 0) == doctest::Approx(7));
}

TEST_CASE("matmul shape mismatch throws") {
  Tape<double> tape;
  auto a = Tensor<double>::zeros(2, 3);
  auto b = Tensor<double>::zeros(2, 3);
  CHECK_THROWS_AS(tape.matmul(a, b), kgalign::ShapeError);
  CHECK_NOTHROW(tape.matmul(a, b, /*transpose_b=*/true));
}

TEST_CASE("softmax values") {
  Tape<double> tape;
  auto zeros = Tensor<double>::from_data(1, 3, {0, 0, 0});
  auto u = tape.softmax(zeros, 1);
  for (int j = 0; j < 3; ++j) CHECK(u.at(0, j) == doctest::Approx(1.0 / 3));

  // high-precision scalar oracle for [1,2,3]
  auto x = Tensor<double>::from_data(1, 3, {1, 2, 3});
  auto y = tape.softmax(x, 1);
  const double e1 = std::exp(1.0), e2 = std::exp(2.0), e3 = std::exp(3.0);
  const double z = e1 + e2 + e3;
  CHECK(y.at(0, 0) == doctest::Approx(e1 / z).epsilon(1e-12));
  CHECK(y.at(0, 1) == doctest::Approx(e2 / z).epsilon(1e-12));
  CHECK(y.at(0, 2) == doctest::Approx(e3 / z).epsilon(1e-12));
  CHECK(y.at(0, 0) == doctest::Approx(0.09003057));
  CHECK(y.at(0, 1) == doctest::Approx(0.24472847));
  CHECK(y.at(0, 2) == doctest::Approx(0.66524096));

  auto single = tape.softmax(Tensor<double>::from_data(1, 1, {42.0}), 1);
  CHECK(single.scalar() == doctest::Approx(1.0));
}

TEST_CASE("softmax rows sum to one and stay non-negative") {
  Rng rng(3);
  Tape<double> tape;
  for (int rep = 0; rep < 20; ++rep) {
    auto x = random_tensor(5, 7, rng, false);
    for (auto& v : x.values()) v *= 50.0;  // exercise the max-subtraction path
    auto y = tape.softmax(x, 1);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double row = 0;
      for (std::size_t j = 0; j < y.cols(); ++j) {
        CHECK(y.at(i, j) >= 0.0);
        row += y.at(i, j);
      }
      CHECK(row == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("elementwise basics") {
  Tape<double> tape;
  auto x = Tensor<double>::from_data(1, 3, {-1.0, 0.0, 2.0});
  auto lr = tape.leaky_relu(x);
  CHECK(lr.at(0, 0) == doctest::Approx(-0.2));
  CHECK(lr.at(0, 1) == doctest::Approx(0.0));
  CHECK(lr.at(0, 2) == doctest::Approx(2.0));

  auto r = tape.relu(Tensor<double>::from_data(1, 1, {-3.0}));
  CHECK(r.scalar() == doctest::Approx(0.0));

  CHECK_THROWS_AS(tape.log(Tensor<double>::from_data(1, 1, {-1.0})), kgalign::NumericError);
  CHECK_THROWS_AS(tape.log(Tensor<double>::from_data(1, 1, {0.0})), kgalign::NumericError);
}

TEST_CASE("concat shapes") {
  Tape<double> tape;
  Rng rng(5);
  auto a = random_tensor(2, 3, rng, false);
  auto single = tape.concat({a}, 1);
  CHECK(single.values() == a.values());

  auto b = random_tensor(2, 5, rng, false);
  auto wide = tape.concat({a, b}, 1);
  CHECK(wide.rows() == 2);
  CHECK(wide.cols() == 8);
  CHECK(wide.at(1, 3) == b.at(1, 0));

  auto c = random_tensor(4, 3, rng, false);
  auto tall = tape.concat({a, c}, 0);
  CHECK(tall.rows() == 6);
  CHECK(tall.cols() == 3);
}

TEST_CASE("segment_weighted_sum basics") {
  Tape<double> tape;
  auto one_row = Tensor<double>::from_data(1, 2, {4.0, 5.0});
  auto w1 = Tensor<double>::from_data(1, 1, {1.0});
  auto out = tape.segment_weighted_sum(one_row, w1, {0}, 1);
  CHECK(out.at(0, 0) == doctest::Approx(4.0));
  CHECK(out.at(0, 1) == doctest::Approx(5.0));

  auto rows = Tensor<double>::from_data(2, 2, {1.0, 0.0, 0.0, 1.0});
  auto w = Tensor<double>::from_data(2, 1, {0.5, 0.5});
  auto mean = tape.segment_weighted_sum(rows, w, {0, 0}, 1);
  CHECK(mean.at(0, 0) == doctest::Approx(0.5));
  CHECK(mean.at(0, 1) == doctest::Approx(0.5));

  // empty segment stays zero
  auto padded = tape.segment_weighted_sum(rows, w, {0, 2}, 3);
  CHECK(padded.at(1, 0) == doctest::Approx(0.0));
  CHECK(padded.at(1, 1) == doctest::Approx(0.0));

  CHECK_THROWS_AS(tape.segment_weighted_sum(rows, w, {0, 5}, 3), kgalign::ShapeError);
}

TEST_CASE("lookup_rows gathers and bounds-checks") {
  Tape<double> tape;
  Rng rng(11);
  auto table = random_tensor(4, 3, rng, false);
  auto all = tape.lookup_rows(table, {0, 1, 2, 3});
  CHECK(all.values() == table.values());
  CHECK_THROWS_AS(tape.lookup_rows(table, {4}), kgalign::ShapeError);
}

TEST_CASE("lookup_rows duplicate id doubles the gradient") {
  Tape<double> tape;
  auto table = Tensor<double>::from_data(3, 2, {1, 2, 3, 4, 5, 6}, /*requires_grad=*/true);
  auto picked = tape.lookup_rows(table, {1, 1});
  auto loss = kgalign::ad::sum_all(tape, picked);
  tape.backward(loss);
  CHECK(table.grad()[2] == doctest::Approx(2.0));
  CHECK(table.grad()[3] == doctest::Approx(2.0));
  CHECK(table.grad()[0] == doctest::Approx(0.0));
}

TEST_CASE("dropout identity cases and survivor statistics") {
  Tape<double> tape;
  Rng rng(17);
  auto x = Tensor<double>::ones(100, 10);

  auto same = tape.dropout(x, 0.0, /*training=*/true, rng);
  CHECK(same.values() == x.values());

  auto inference = tape.dropout(x, 0.2, /*training=*/false, rng);
  CHECK(inference.values() == x.values());

  auto big = Tensor<double>::ones(1000, 100);
  auto dropped = tape.dropout(big, 0.5, /*training=*/true, rng);
  std::size_t survivors = 0;
  for (const double v : dropped.values()) {
    if (v != 0.0) {
      ++survivors;
      CHECK(v == doctest::Approx(2.0));
    }
  }
  const double fraction = static_cast<double>(survivors) / 1e5;
  CHECK(fraction > 0.49);
  CHECK(fraction < 0.51);

  CHECK_THROWS_AS(tape.dropout(x, 1.0, true, rng), kgalign::ConfigError);
}

TEST_CASE("backward populates expected analytic gradients") {
  Tape<double> tape;
  auto x = Tensor<double>::from_data(3, 1, {1.0, -2.0, 0.5}, /*requires_grad=*/true);
  auto loss = kgalign::ad::sum_all(tape, x);
  tape.backward(loss);
  for (const double g : x.grad()) CHECK(g == doctest::Approx(1.0));

  Tape<double> tape2;
  auto y = Tensor<double>::from_data(1, 1, {3.0}, /*requires_grad=*/true);
  auto sq = tape2.mul(y, y);
  tape2.backward(sq);
  CHECK(y.grad()[0] == doctest::Approx(6.0));  // d(y^2)/dy = 2y
}

TEST_CASE("backward rejects non-scalar losses") {
  Tape<double> tape;
  auto x = Tensor<double>::zeros(2, 2, true);
  CHECK_THROWS_AS(tape.backward(tape.add(x, x)), kgalign::ShapeError);
}

TEST_CASE("gradient accumulation: f(x)+f(x) doubles the gradient") {
  auto grad_of = [](bool doubled) {
    Tape<double> tape;
    auto x = Tensor<double>::from_data(2, 2, {0.3, -0.7, 1.1, 0.4}, true);
    auto f = kgalign::ad::sum_all(tape, tape.mul(x, x));
    auto loss = doubled ? tape.add(f, f) : f;
    tape.backward(loss);
    return x.grad();
  };
  const auto g1 = grad_of(false);
  const auto g2 = grad_of(true);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(2.0 * g1[i]));
}

TEST_CASE("tape determinism: identical inputs give bitwise-identical losses") {
  auto run = []() {
    Rng rng(123);
    Tape<double> tape;
    auto a = random_tensor(6, 4, rng);
    auto b = random_tensor(4, 3, rng);
    auto h = tape.softmax(tape.matmul(a, b), 1);
    auto loss = kgalign::ad::sum_all(tape, tape.mul(h, h));
    return loss.scalar();
  };
  const double first = run();
  const double second = run();
  CHECK(std::memcmp(&first, &second, sizeof(double)) == 0);
}

TEST_CASE("finite differences validate every primitive backward") {
  for (const auto& report : kgalign::ad::run_builtin_gradchecks()) {
    INFO("op: " << report.name << " max_rel_err: " << report.max_rel_err);
    CHECK(report.pass);
  }
}

TEST_CASE("gradcheck report covers each registered op exactly once") {
  const auto cases = kgalign::ad::builtin_gradcheck_cases();
  std::vector<std::string> names;
  for (const auto& c : cases) names.push_back(c.name);
  std::sort(names.begin(), names.end());
  CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
  // spot-check the required kinds are present
  for (const char* expected :
       {"matmul", "softmax_rows", "leaky_relu", "relu", "exp", "log", "neg", "add", "sub",
        "mul", "scalar_mul", "concat_rows", "concat_cols", "segment_weighted_sum",
        "lookup_rows", "dropout"}) {
    CHECK(std::find(names.begin(), names.end(), expected) != names.end());
  }
}

TEST_CASE("gradcheck harness catches an injected sign error") {
  // fixture: a leaky_relu whose backward has the slope branch sign flipped
  kgalign::ad::GradCheckCase broken;
  broken.name = "leaky_relu_broken";
  broken.tolerance = 1e-5;
  broken.make_inputs = [](Rng& rng) {
    auto t = Tensor<double>::zeros(3, 3, true);
    for (auto& v : t.values()) {
      v = rng.uniform(-1.0, 1.0);
      if (std::abs(v) < 0.05) v += 0.1;
    }
    return std::vector<Tensor<double>>{t};
  };
  broken.build = [](Tape<double>& tape, std::vector<Tensor<double>>& in) {
    auto x = in[0];
    auto out = Tensor<double>::zeros(x.rows(), x.cols(), true);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const double v = x.values()[i];
      out.values()[i] = v > 0 ? v : 0.2 * v;
    }
    tape.record([x, out]() mutable {
      if (!out.has_grad()) return;
      x.ensure_grad();
      for (std::size_t i = 0; i < x.numel(); ++i) {
        const double v = x.values()[i];
        const double d = v > 0 ? 1.0 : -0.2;  // wrong sign on the slope branch
        x.grad()[i] += d * out.grad()[i];
      }
    });
    return kgalign::ad::sum_all(tape, out);
  };
  const auto report = kgalign::ad::run_gradcheck_case(broken);
  CHECK_FALSE(report.pass);
}
