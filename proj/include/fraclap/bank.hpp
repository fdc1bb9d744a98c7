#pragma once

#include <map>
#include <memory>

#include "fracops.hpp"

namespace fraclap {

// Smooth test functions vanishing at both endpoints, with their one-sided derivatives.
// Bubbles 16 t^{k+2}(1-t)^2 (t = (x-a)/L) have closed-form derivatives; mollifier bumps
// exp(1 - 1/(1-r^2)) are differentiated once per (side, alpha) on a uniform auxiliary mesh.

class TestFunction {
 public:
  static TestFunction bubble(Interval iv, int k) {
    TestFunction f;
    f.iv_ = iv;
    f.name_ = "bubble" + std::to_string(k);
    f.mu_ = k + 2.0;
    f.scale_ = 16.0 / std::pow(iv.length(), k + 4.0);
    return f;
  }

  static TestFunction bump(Interval iv, double center, double radius, std::string name) {
    TestFunction f;
    f.iv_ = iv;
    f.name_ = std::move(name);
    f.center_ = iv.a + center * iv.length();
    f.radius_ = radius * iv.length();
    f.mu_ = -1.0;
    f.cache_ = std::make_shared<Cache>();
    return f;
  }

  const std::string& name() const { return name_; }

  double value(const Pt& p) const {
    if (mu_ >= 0) return scale_ * std::pow(p.da, mu_) * p.db * p.db;
    const double r = (p.x - center_) / radius_;
    if (std::abs(r) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - r * r));
  }

  /// D^alpha on the given side at p.
  double deriv(Side side, double alpha, const Pt& p) const {
    if (mu_ >= 0) return scale_ * powprod_op(mu_, 2.0, -alpha, side, p);
    return aux(side, alpha).eval(p);
  }

  GridFunction sample_on(const std::vector<double>& mesh) const {
    return sample(mesh, PointFn([this](const Pt& p) { return value(p); }));
  }

 private:
  struct Cache {
    std::mutex mu;
    std::map<std::pair<int, double>, std::shared_ptr<Model>> models;
  };

  const Model& aux(Side side, double alpha) const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto key = std::make_pair(side == Side::left ? 0 : 1, alpha);
    auto it = cache_->models.find(key);
    if (it != cache_->models.end()) return *it->second;
    auto mesh = graded_mesh(iv_, 1024, 1.0, Grading::none);
    GridFunction f = sample_on(mesh);
    auto m = std::make_shared<Model>(rl_derivative(f, alpha, side));
    cache_->models[key] = m;
    return *m;
  }

  Interval iv_;
  std::string name_;
  double mu_ = 0.0, scale_ = 1.0, center_ = 0.0, radius_ = 1.0;
  std::shared_ptr<Cache> cache_;
};

/// Six bubbles and six bumps.
inline std::vector<TestFunction> test_bank(Interval iv) {
  std::vector<TestFunction> bank;
  for (int k = 0; k < 6; ++k) bank.push_back(TestFunction::bubble(iv, k));
  const double c[6] = {0.25, 0.4, 0.5, 0.6, 0.75, 0.5};
  const double r[6] = {0.2, 0.25, 0.3, 0.25, 0.2, 0.45};
  for (int j = 0; j < 6; ++j) bank.push_back(TestFunction::bump(iv, c[j], r[j], "bump" + std::to_string(j)));
  return bank;
}

}  // namespace fraclap
