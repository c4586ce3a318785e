#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "gna/tensor.hpp"

using namespace gna;

namespace {

Tensor random_tensor(int rows, int cols, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0, bool requires_grad = true) {
  std::uniform_real_distribution<double> unif(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  for (auto& x : v) x = unif(rng);
  return Tensor::from_values(rows, cols, std::move(v), requires_grad);
}

/// Central-difference check of d loss / d leaf for every entry of every leaf.
void check_gradients(std::vector<Tensor> leaves, const std::function<Tensor()>& make_loss,
                     double step = 1e-6, double tol = 1e-6) {
  Tensor loss = make_loss();
  for (auto& l : leaves) l.zero_grad();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  for (auto& l : leaves) analytic.push_back(l.grad());

  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto& vals = leaves[li].values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + step;
      const double fp = make_loss().item();
      vals[i] = saved - step;
      const double fm = make_loss().item();
      vals[i] = saved;
      const double fd = (fp - fm) / (2.0 * step);
      const double a = analytic[li][i];
      const double err = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
      CAPTURE(li);
      CAPTURE(i);
      CAPTURE(a);
      CAPTURE(fd);
      CHECK(err < tol);
    }
  }
}

}  // namespace

TEST_CASE("matmul values and shape checks") {
  Tensor a = Tensor::from_values(2, 2, {1, 2, 3, 4});
  Tensor b = Tensor::from_values(2, 2, {5, 6, 7, 8});
  Tensor c = matmul(a, b);
  CHECK(c.at(0, 0) == doctest::Approx(19));
  CHECK(c.at(0, 1) == doctest::Approx(22));
  CHECK(c.at(1, 0) == doctest::Approx(43));
  CHECK(c.at(1, 1) == doctest::Approx(50));

  Tensor bad = Tensor::zeros(3, 2);
  CHECK_THROWS_AS(matmul(a, bad), std::invalid_argument);
}

TEST_CASE("transpose swaps entries") {
  Tensor a = Tensor::from_values(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor t = transpose(a);
  CHECK(t.rows() == 3);
  CHECK(t.cols() == 2);
  CHECK(t.at(2, 1) == doctest::Approx(6));
  CHECK(t.at(1, 0) == doctest::Approx(2));
}

TEST_CASE("elementwise op values") {
  Tensor a = Tensor::from_values(1, 3, {-1.0, 0.0, 2.0});
  Tensor r = relu(a);
  CHECK(r.at(0, 0) == 0.0);
  CHECK(r.at(0, 2) == 2.0);

  Tensor s = sigmoid(Tensor::from_values(1, 1, {0.0}));
  CHECK(s.item() == doctest::Approx(0.5));

  Tensor e = exp(Tensor::from_values(1, 1, {1.0}));
  CHECK(e.item() == doctest::Approx(std::exp(1.0)));

  Tensor m = elementwise_mul(a, a);
  CHECK(m.at(0, 0) == doctest::Approx(1.0));
  CHECK(m.at(0, 2) == doctest::Approx(4.0));
}

TEST_CASE("row and column normalization") {
  Tensor a = Tensor::from_values(2, 2, {1, 3, 2, 2});
  Tensor r = row_normalize(a);
  CHECK(r.at(0, 0) == doctest::Approx(0.25));
  CHECK(r.at(0, 1) == doctest::Approx(0.75));
  CHECK(r.at(1, 0) == doctest::Approx(0.5));

  Tensor c = col_normalize(a);
  CHECK(c.at(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(c.at(1, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(c.at(0, 1) == doctest::Approx(0.6));

  SUBCASE("zero rows survive via the clamped denominator") {
    Tensor z = Tensor::from_values(2, 2, {0, 0, 1, 1});
    Tensor rn = row_normalize(z);
    CHECK(rn.at(0, 0) == 0.0);
    CHECK(rn.at(1, 0) == doctest::Approx(0.5));
  }
}

TEST_CASE("sum, mean_rows, concat_cols, pad_rows values") {
  Tensor a = Tensor::from_values(2, 2, {1, 2, 3, 4});
  CHECK(sum(a).item() == doctest::Approx(10.0));

  Tensor m = mean_rows(a);
  CHECK(m.rows() == 1);
  CHECK(m.at(0, 0) == doctest::Approx(2.0));
  CHECK(m.at(0, 1) == doctest::Approx(3.0));

  Tensor b = Tensor::from_values(2, 1, {9, 9});
  Tensor cat = concat_cols(a, b);
  CHECK(cat.cols() == 3);
  CHECK(cat.at(1, 2) == doctest::Approx(9.0));

  Tensor pad = Tensor::from_values(1, 2, {7, 8});
  Tensor padded = pad_rows(a, 4, pad);
  CHECK(padded.rows() == 4);
  CHECK(padded.at(2, 0) == doctest::Approx(7.0));
  CHECK(padded.at(3, 1) == doctest::Approx(8.0));
  CHECK_THROWS_AS(pad_rows(a, 1, pad), std::invalid_argument);
}

TEST_CASE("non-finite results are rejected") {
  Tensor big = Tensor::from_values(1, 1, {1000.0});
  CHECK_THROWS_AS(exp(big), std::runtime_error);
}

TEST_CASE("backward requires a scalar loss") {
  Tensor a = Tensor::from_values(1, 2, {1, 2}, true);
  CHECK_THROWS_AS(backward(a), std::invalid_argument);
}

TEST_CASE("gradient of matmul chain matches finite differences") {
  std::mt19937_64 rng(7);
  Tensor a = random_tensor(3, 4, rng);
  Tensor b = random_tensor(4, 2, rng);
  check_gradients({a, b}, [&] { return sum(matmul(a, b)); });
}

TEST_CASE("gradient of composite expression matches finite differences") {
  std::mt19937_64 rng(11);
  Tensor a = random_tensor(3, 3, rng);
  Tensor b = random_tensor(3, 3, rng);
  Tensor row = random_tensor(1, 3, rng);
  Tensor s = random_tensor(1, 1, rng, 0.5, 1.5);
  auto f = [&] {
    Tensor x = add_rowvec(matmul(a, transpose(b)), row);
    Tensor y = elementwise_mul(sigmoid(x), scale(b, s));
    Tensor z = add(y, scalar_mul(a, 0.7));
    Tensor w = concat_cols(z, a);
    return add(sum(elementwise_mul(w, w)),
               matmul(mean_rows(z), transpose(mean_rows(a))));
  };
  check_gradients({a, b, row, s}, f);
}

TEST_CASE("gradient of relu away from the kink") {
  std::mt19937_64 rng(13);
  Tensor a = random_tensor(2, 3, rng, 0.2, 1.0);
  Tensor b = random_tensor(2, 3, rng, -1.0, -0.2);
  check_gradients({a, b}, [&] { return sum(relu(add(a, b))); });
}

TEST_CASE("gradient of exp and normalizations matches finite differences") {
  std::mt19937_64 rng(17);
  Tensor a = random_tensor(3, 3, rng);
  check_gradients({a}, [&] { return sum(elementwise_mul(row_normalize(exp(a)), a)); });
  check_gradients({a}, [&] { return sum(elementwise_mul(col_normalize(exp(a)), a)); });
}

TEST_CASE("gradient of alternated normalization rounds matches finite differences") {
  std::mt19937_64 rng(19);
  Tensor a = random_tensor(4, 4, rng);
  Tensor w = random_tensor(4, 4, rng);
  auto f = [&] {
    Tensor s = exp(a);
    for (int round = 0; round < 5; ++round) {
      s = row_normalize(s);
      s = col_normalize(s);
    }
    return sum(elementwise_mul(s, w));
  };
  check_gradients({a, w}, f);
}

TEST_CASE("gradient of pad_rows flows into the pad row") {
  std::mt19937_64 rng(23);
  Tensor a = random_tensor(2, 3, rng);
  Tensor pad = random_tensor(1, 3, rng);
  Tensor w = random_tensor(5, 3, rng);
  check_gradients({a, pad}, [&] { return sum(elementwise_mul(pad_rows(a, 5, pad), w)); });
}

TEST_CASE("backward accumulates across calls") {
  Tensor a = Tensor::from_values(1, 2, {1.0, 2.0}, true);
  a.zero_grad();
  backward(sum(a));
  backward(sum(a));
  CHECK(a.grad()[0] == doctest::Approx(2.0));
  CHECK(a.grad()[1] == doctest::Approx(2.0));
}

TEST_CASE("backward of a sum of losses equals accumulated per-loss backward") {
  std::mt19937_64 rng(29);
  Tensor a = random_tensor(3, 3, rng);
  Tensor b = random_tensor(3, 3, rng);

  auto loss1 = [&] { return sum(matmul(a, b)); };
  auto loss2 = [&] { return sum(elementwise_mul(a, b)); };

  a.zero_grad();
  b.zero_grad();
  backward(add(loss1(), loss2()));
  const std::vector<double> ga = a.grad();
  const std::vector<double> gb = b.grad();

  a.zero_grad();
  b.zero_grad();
  backward(loss1());
  backward(loss2());
  for (std::size_t i = 0; i < ga.size(); ++i) {
    CHECK(a.grad()[i] == doctest::Approx(ga[i]));
    CHECK(b.grad()[i] == doctest::Approx(gb[i]));
  }
}

TEST_CASE("adam first step matches hand computation") {
  Tensor p = Tensor::from_values(1, 1, {1.0}, true);
  p.set_name("p");
  AdamConfig cfg;
  AdamState adam({p}, cfg);
  p.zero_grad();
  backward(p);  // d p / d p = 1
  adam.step();
  const double expected = 1.0 - cfg.lr * (1.0 / (1.0 + cfg.eps) + cfg.weight_decay * 1.0);
  CHECK(p.item() == doctest::Approx(expected).epsilon(1e-12));
  CHECK(adam.step_count() == 1);
}

TEST_CASE("adam decoupled weight decay acts even with zero gradient") {
  Tensor p = Tensor::from_values(1, 1, {2.0}, true);
  p.set_name("p");
  AdamConfig cfg;
  AdamState adam({p}, cfg);
  adam.zero_grad();
  adam.step();
  CHECK(p.item() == doctest::Approx(2.0 - cfg.lr * cfg.weight_decay * 2.0));
}

TEST_CASE("adam rejects parameters without gradients") {
  Tensor p = Tensor::from_values(1, 1, {1.0}, true);
  p.set_name("p");
  AdamState adam({p}, AdamConfig{});
  CHECK_THROWS_AS(adam.step(), std::runtime_error);
}

TEST_CASE("shape mismatches raise invalid_argument") {
  Tensor a = Tensor::zeros(2, 2);
  Tensor b = Tensor::zeros(2, 3);
  CHECK_THROWS_AS(add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(elementwise_mul(a, b), std::invalid_argument);
  CHECK_THROWS_AS(add_rowvec(a, Tensor::zeros(1, 3)), std::invalid_argument);
  CHECK_THROWS_AS(scale(a, Tensor::zeros(2, 1)), std::invalid_argument);
  CHECK_THROWS_AS(concat_cols(a, Tensor::zeros(3, 1)), std::invalid_argument);
}
