#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sfb/format.hpp"
#include "sfb/point.hpp"

namespace sfb {

// Intermediate quantities of one iteration: the pre-resolvent point
// z = w - gamma * sample, the resolvent output y, and the step parameters.
struct StepRecord {
  Point z;
  Point y;
  double gamma = 0.0;
  double lambda = 0.0;
};

// Iterates w_1..w_{N+1} of one run plus the N step records that connect them.
// sq_dist holds ||w_n - solution||^2 when the problem's solution is known.
class Trajectory {
 public:
  Trajectory() = default;

  void start(Point w1) {
    iterates_.clear();
    steps_.clear();
    sq_dist_.reset();
    iterates_.push_back(std::move(w1));
  }

  void append(Point w_next, StepRecord rec) {
    if (iterates_.empty()) throw std::logic_error("Trajectory::append before start");
    iterates_.push_back(std::move(w_next));
    steps_.push_back(std::move(rec));
  }

  void set_sq_dist(std::vector<double> d) {
    if (d.size() != iterates_.size())
      throw std::invalid_argument("Trajectory::set_sq_dist: size mismatch");
    sq_dist_ = std::move(d);
  }

  std::size_t steps() const { return steps_.size(); }
  // n in [1, steps()+1]
  const Point& iterate(std::size_t n) const { return iterates_.at(n - 1); }
  // n in [1, steps()]
  const StepRecord& step_record(std::size_t n) const { return steps_.at(n - 1); }
  const std::optional<std::vector<double>>& sq_dist() const { return sq_dist_; }

  std::string to_csv() const {
    std::string out = "n,sq_dist,gamma,lambda\n";
    for (std::size_t i = 0; i < iterates_.size(); ++i) {
      out += std::to_string(i + 1);
      out += ',';
      if (sq_dist_) out += format_double((*sq_dist_)[i]);
      out += ',';
      if (i < steps_.size()) {
        out += format_double(steps_[i].gamma);
        out += ',';
        out += format_double(steps_[i].lambda);
      } else {
        out += ',';
      }
      out += '\n';
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["iterates"] = iterates_;
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& s : steps_)
      recs.push_back({{"z", s.z}, {"y", s.y}, {"gamma", s.gamma}, {"lambda", s.lambda}});
    j["steps"] = std::move(recs);
    if (sq_dist_) j["sq_dist"] = *sq_dist_;
    return j;
  }

  static Trajectory from_json(const nlohmann::json& j) {
    Trajectory t;
    auto its = j.at("iterates").get<std::vector<Point>>();
    if (its.empty()) throw std::invalid_argument("Trajectory::from_json: no iterates");
    t.iterates_ = std::move(its);
    for (const auto& r : j.at("steps")) {
      StepRecord s;
      s.z = r.at("z").get<Point>();
      s.y = r.at("y").get<Point>();
      s.gamma = r.at("gamma").get<double>();
      s.lambda = r.at("lambda").get<double>();
      t.steps_.push_back(std::move(s));
    }
    if (t.steps_.size() + 1 != t.iterates_.size())
      throw std::invalid_argument("Trajectory::from_json: step/iterate count mismatch");
    if (j.contains("sq_dist")) {
      auto d = j.at("sq_dist").get<std::vector<double>>();
      if (d.size() != t.iterates_.size())
        throw std::invalid_argument("Trajectory::from_json: sq_dist size mismatch");
      t.sq_dist_ = std::move(d);
    }
    return t;
  }

  bool operator==(const Trajectory& o) const {
    if (iterates_ != o.iterates_ || sq_dist_ != o.sq_dist_) return false;
    if (steps_.size() != o.steps_.size()) return false;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      const auto& a = steps_[i];
      const auto& b = o.steps_[i];
      if (a.z != b.z || a.y != b.y || a.gamma != b.gamma || a.lambda != b.lambda)
        return false;
    }
    return true;
  }

 private:
  std::vector<Point> iterates_;
  std::vector<StepRecord> steps_;
  std::optional<std::vector<double>> sq_dist_;
};

}  // namespace sfb
