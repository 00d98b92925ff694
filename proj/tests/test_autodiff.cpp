#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <functional>
#include <map>

#include "doctest.h"
#include "linkrec/autodiff.hpp"
#include "linkrec/error.hpp"
#include "test_support.hpp"

using namespace linkrec;

namespace {

using Refs = std::map<std::string, Tape::NodeRef>;
using Builder = std::function<Tape::NodeRef(Tape&, Refs&)>;

// Records the same graph twice: once for analytic gradients, then entrywise
// for the central-difference oracle.
double gradient_error(const Builder& build, const ParamMap& params,
                      double step = 1e-6) {
  auto eval = [&](const ParamMap& p) {
    Tape tape;
    Refs refs;
    for (const auto& [name, m] : p) refs[name] = tape.leaf(name, m);
    return tape.value(build(tape, refs))(0, 0);
  };
  Tape tape;
  Refs refs;
  for (const auto& [name, m] : params) refs[name] = tape.leaf(name, m);
  const auto loss = build(tape, refs);
  const GradientMap grads = tape.backward(loss);
  return finite_diff_check(eval, params, grads, step);
}

}  // namespace

TEST_CASE("matmul values") {
  Tape tape;
  Rng rng(1);
  const Mat x = test::random_matrix(2, 3, rng);
  const auto xid = tape.constant(x);
  const auto eye = tape.constant(Mat::Identity(2, 2));
  CHECK(tape.value(tape.matmul(eye, xid)) == x);

  Mat a(2, 2);
  a << 1, 2, 3, 4;
  const auto an = tape.constant(a);
  const auto i2 = tape.constant(Mat::Identity(2, 2));
  CHECK(tape.value(tape.matmul(an, i2)) == a);

  CHECK_THROWS_AS(tape.matmul(xid, xid), std::invalid_argument);
}

TEST_CASE("per-op gradients match central differences") {
  Rng rng(42);

  SUBCASE("matmul") {
    const ParamMap params{{"a", test::random_matrix(5, 4, rng)},
                          {"b", test::random_matrix(4, 3, rng)}};
    const double err = gradient_error(
        [](Tape& t, Refs& r) { return t.sum(t.matmul(r["a"], r["b"])); },
        params);
    CHECK(err < 1e-6);
  }

  SUBCASE("transpose and add/sub/scalar_mul") {
    const ParamMap params{{"a", test::random_matrix(3, 4, rng)},
                          {"b", test::random_matrix(4, 3, rng)}};
    const double err = gradient_error(
        [](Tape& t, Refs& r) {
          const auto at = t.transpose(r["a"]);
          return t.sum(t.sub(t.scalar_mul(1.7, t.add(at, r["b"])),
                             t.scalar_mul(0.5, r["b"])));
        },
        params);
    CHECK(err < 1e-6);
  }

  SUBCASE("sigmoid") {
    const ParamMap params{{"a", test::random_matrix(4, 4, rng)}};
    const double err = gradient_error(
        [](Tape& t, Refs& r) { return t.sum(t.sigmoid(r["a"])); }, params);
    CHECK(err < 1e-6);
  }

  SUBCASE("relu") {
    const ParamMap params{{"a", test::random_matrix(4, 4, rng)}};
    const double err = gradient_error(
        [](Tape& t, Refs& r) { return t.sum(t.relu(r["a"])); }, params);
    CHECK(err < 1e-6);
  }

  SUBCASE("dropout with a fixed seed") {
    const ParamMap params{{"a", test::random_matrix(6, 5, rng)}};
    const double err = gradient_error(
        [](Tape& t, Refs& r) {
          return t.sum(t.dropout(r["a"], 0.4, 99, /*training=*/true));
        },
        params);
    CHECK(err < 1e-6);
  }

  SUBCASE("concat and reshape") {
    const ParamMap params{{"a", test::random_matrix(3, 2, rng)},
                          {"b", test::random_matrix(3, 1, rng)}};
    const double err = gradient_error(
        [](Tape& t, Refs& r) {
          const Tape::NodeRef parts[] = {r["a"], r["b"]};
          return t.sum(t.reshape(t.concat_columns(parts), 9, 1));
        },
        params);
    CHECK(err < 1e-6);
  }

  SUBCASE("add_row") {
    const ParamMap params{{"x", test::random_matrix(5, 3, rng)},
                          {"row", test::random_matrix(1, 3, rng)}};
    const double err = gradient_error(
        [](Tape& t, Refs& r) {
          return t.sum(t.sigmoid(t.add_row(r["x"], r["row"])));
        },
        params);
    CHECK(err < 1e-6);
  }

  SUBCASE("spd_inverse with an asymmetric downstream weighting") {
    const ParamMap params{{"s", test::random_spd(6, rng)}};
    const Mat weight = test::random_matrix(6, 6, rng);
    const double err = gradient_error(
        [&](Tape& t, Refs& r) {
          return t.sum(t.matmul(t.spd_inverse(r["s"]), t.constant(weight)));
        },
        params);
    CHECK(err < 1e-6);
  }

  SUBCASE("bce_mean") {
    Mat probs = test::random_matrix(4, 4, rng, 0.05, 0.95);
    Mat labels(4, 4);
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 4; ++j)
        labels(i, j) = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const ParamMap params{{"o", probs}};
    const double err = gradient_error(
        [&](Tape& t, Refs& r) { return t.bce_mean(r["o"], labels); }, params);
    CHECK(err < 1e-6);
  }
}

TEST_CASE("spd_inverse values") {
  Tape tape;
  const auto eye = tape.spd_inverse(tape.constant(Mat::Identity(3, 3)));
  CHECK(tape.value(eye) == Mat::Identity(3, 3));

  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 4.0;
  const Mat dinv = tape.value(tape.spd_inverse(tape.constant(d)));
  CHECK(dinv(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(dinv(1, 1) == doctest::Approx(0.25).epsilon(1e-12));

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat s = test::random_spd(6, rng);
    Tape t2;
    const Mat inv = t2.value(t2.spd_inverse(t2.constant(s)));
    CHECK((inv * s - Mat::Identity(6, 6)).norm() < 1e-10);
    CHECK((inv * s - Mat::Identity(6, 6)).norm() < 1e-8 * 6);
  }
}

TEST_CASE("spd_inverse failures") {
  Tape tape;
  Mat indefinite = Mat::Identity(2, 2);
  indefinite(0, 0) = -1.0;
  CHECK_THROWS_AS(tape.spd_inverse(tape.constant(indefinite)), NumericError);

  Rng rng(9);
  Mat asym = test::random_matrix(3, 3, rng);
  asym(0, 1) = asym(1, 0) + 1.0;
  CHECK_THROWS_AS(tape.spd_inverse(tape.constant(asym)), std::invalid_argument);

  CHECK_THROWS_AS(tape.spd_inverse(tape.constant(Mat::Ones(2, 3))),
                  std::invalid_argument);
}

TEST_CASE("elementwise values") {
  Tape tape;
  CHECK(tape.value(tape.sigmoid(tape.constant(Mat::Zero(1, 1))))(0, 0) == 0.5);

  Mat v(1, 2);
  v << -1, 2;
  const Mat relu_v = tape.value(tape.relu(tape.constant(v)));
  CHECK(relu_v(0, 0) == 0.0);
  CHECK(relu_v(0, 1) == 2.0);

  Rng rng(3);
  const Mat x = test::random_matrix(4, 4, rng);
  const auto xn = tape.constant(x);
  CHECK(tape.value(tape.dropout(xn, 0.0, 1, true)) == x);
  CHECK(tape.value(tape.dropout(xn, 0.6, 1, false)) == x);  // inference identity

  // Training mode: entries are exactly 0 or scaled by 1/(1-rate).
  const Mat dropped = tape.value(tape.dropout(xn, 0.5, 7, true));
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) {
      const bool zeroed = dropped(i, j) == 0.0;
      const bool scaled = dropped(i, j) == 2.0 * x(i, j);
      CHECK((zeroed || scaled));
    }

  CHECK_THROWS_AS(tape.dropout(xn, 1.0, 1, true), std::invalid_argument);
  CHECK_THROWS_AS(tape.add(xn, tape.constant(Mat::Ones(2, 2))),
                  std::invalid_argument);
}

TEST_CASE("concat_columns values and gradient shape") {
  Tape tape;
  Mat a(2, 1), b(2, 1);
  a << 1, 2;
  b << 3, 4;
  const Tape::NodeRef parts[] = {tape.leaf("a", a), tape.leaf("b", b)};
  const auto cat = tape.concat_columns(parts);
  Mat expected(2, 2);
  expected << 1, 3, 2, 4;
  CHECK(tape.value(cat) == expected);

  const GradientMap grads = tape.backward(tape.sum(cat));
  CHECK(grads.at("a") == Mat::Ones(2, 1));
  CHECK(grads.at("b") == Mat::Ones(2, 1));

  Tape single;
  const Mat x = Mat::Ones(3, 2);
  const Tape::NodeRef one[] = {single.constant(x)};
  CHECK(single.value(single.concat_columns(one)) == x);

  Tape bad;
  const Tape::NodeRef mismatch[] = {bad.constant(Mat::Ones(2, 1)),
                                    bad.constant(Mat::Ones(3, 1))};
  CHECK_THROWS_AS(bad.concat_columns(mismatch), std::invalid_argument);
}

TEST_CASE("backward basics") {
  {
    Tape tape;
    const auto w = tape.leaf("w", Mat::Ones(2, 2));
    const GradientMap grads = tape.backward(tape.sum(w));
    CHECK(grads.at("w") == Mat::Ones(2, 2));
  }
  {
    Tape tape;
    const auto w = tape.leaf("w", Mat::Constant(1, 1, 3.0));
    const GradientMap grads = tape.backward(tape.sum(tape.matmul(w, w)));
    CHECK(grads.at("w")(0, 0) == 6.0);  // d(w^2)/dw = 2w
  }
  {
    Tape tape;
    const auto w = tape.leaf("w", Mat::Ones(2, 2));
    const auto unused = tape.leaf("unused", Mat::Ones(3, 3));
    (void)unused;
    const GradientMap grads = tape.backward(tape.sum(w));
    CHECK(grads.at("unused") == Mat::Zero(3, 3));
  }
  {
    Tape tape;
    const auto w = tape.leaf("w", Mat::Ones(2, 2));
    CHECK_THROWS_AS(tape.backward(w), std::invalid_argument);  // not scalar
  }
  {
    Tape tape;
    CHECK_THROWS_AS(tape.backward(0), std::invalid_argument);  // empty
  }
  {
    Tape tape;
    const auto w = tape.leaf("w", Mat::Ones(1, 1));
    const auto loss = tape.sum(w);
    tape.backward(loss);
    CHECK_THROWS_AS(tape.backward(loss), std::invalid_argument);  // single-use
  }
}

TEST_CASE("backward is deterministic for an identical tape") {
  Rng rng(11);
  const Mat a = test::random_matrix(6, 6, rng);
  const Mat b = test::random_matrix(6, 6, rng);
  auto run = [&]() {
    Tape tape;
    const auto an = tape.leaf("a", a);
    const auto bn = tape.leaf("b", b);
    const auto out = tape.sigmoid(tape.matmul(an, tape.transpose(bn)));
    return tape.backward(tape.sum(out));
  };
  const GradientMap g1 = run();
  const GradientMap g2 = run();
  CHECK(g1.at("a") == g2.at("a"));
  CHECK(g1.at("b") == g2.at("b"));
}

TEST_CASE("bce_mean values and closed-form gradient") {
  {
    Tape tape;
    Mat o(1, 2), y(1, 2);
    o << 1.0, 0.0;
    y << 1.0, 0.0;
    CHECK(tape.value(tape.bce_mean(tape.constant(o), y))(0, 0) ==
          doctest::Approx(0.0).epsilon(1e-9));
  }
  {
    Tape tape;
    const Mat o = Mat::Constant(1, 1, 0.5);
    const Mat y = Mat::Ones(1, 1);
    CHECK(tape.value(tape.bce_mean(tape.constant(o), y))(0, 0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  {
    Tape tape;
    Mat o(1, 2), y(1, 2);
    o << 0.9, 0.1;
    y << 1.0, 0.0;
    CHECK(tape.value(tape.bce_mean(tape.constant(o), y))(0, 0) ==
          doctest::Approx(0.105360515657826).epsilon(1e-12));
  }
  {
    Tape tape;
    Rng rng(13);
    const Mat o = test::random_matrix(3, 3, rng, 0.1, 0.9);
    Mat y(3, 3);
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j)
        y(i, j) = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const auto on = tape.leaf("o", o);
    const GradientMap grads = tape.backward(tape.bce_mean(on, y));
    const Mat expected =
        ((o.array() - y.array()) / (o.array() * (1.0 - o.array())) /
         static_cast<double>(o.size()))
            .matrix();
    CHECK((grads.at("o") - expected).cwiseAbs().maxCoeff() < 1e-9);
  }
  {
    Tape tape;
    Mat bad_labels = Mat::Constant(1, 1, 0.5);
    CHECK_THROWS_AS(
        tape.bce_mean(tape.constant(Mat::Constant(1, 1, 0.5)), bad_labels),
        std::invalid_argument);
  }
}

TEST_CASE("finite_diff_check on trivial functions") {
  Rng rng(17);
  const ParamMap params{{"p", test::random_matrix(3, 3, rng)}};
  const GradientMap ones{{"p", Mat::Ones(3, 3)}};
  auto sum_all = [](const ParamMap& p) { return p.at("p").sum(); };
  CHECK(finite_diff_check(sum_all, params, ones, 1e-6) < 1e-10);
}

TEST_CASE("tape debug dump is valid-looking JSON") {
  Tape tape;
  const auto a = tape.leaf("a", Mat::Ones(2, 2));
  tape.sum(tape.sigmoid(a));
  const std::string dump = tape.debug_dump();
  CHECK(dump.front() == '[');
  CHECK(dump.back() == ']');
  CHECK(dump.find("\"op\":\"sigmoid\"") != std::string::npos);
  CHECK(dump.find("\"name\":\"a\"") != std::string::npos);
}
