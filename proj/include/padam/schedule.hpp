#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "padam/errors.hpp"

// Piecewise-constant step-decay schedules for the learning rate and for the
// partial-adaptivity parameter p. Decay applies AT the milestone epoch: a
// 0-based training loop that queries the schedule once per epoch sees the
// decayed value on the milestone epoch itself.

namespace padam {

struct StepDecaySchedule {
  double base = 0.1;
  double factor = 0.1;                  // multiplicative decay in (0, 1]
  std::vector<std::size_t> milestones;  // strictly increasing, >= 1
};

inline void validate_schedule(const StepDecaySchedule& s, bool allow_zero_base = false) {
  if (!(allow_zero_base ? s.base >= 0.0 : s.base > 0.0))
    throw ConfigError("schedule: base must be positive, got " + std::to_string(s.base));
  if (!(s.factor > 0.0 && s.factor <= 1.0))
    throw ConfigError("schedule: factor must be in (0, 1], got " + std::to_string(s.factor));
  for (std::size_t i = 0; i < s.milestones.size(); ++i) {
    if (s.milestones[i] < 1 || (i > 0 && s.milestones[i] <= s.milestones[i - 1]))
      throw ConfigError("schedule: milestones must be strictly increasing and >= 1");
  }
}

inline double lr_at(const StepDecaySchedule& s, std::size_t epoch) {
  const auto hits = std::upper_bound(s.milestones.begin(), s.milestones.end(), epoch) -
                    s.milestones.begin();
  return s.base * std::pow(s.factor, static_cast<double>(hits));
}

enum class PMode { Constant, StepDecay, Linear };

inline std::string p_mode_name(PMode m) {
  switch (m) {
    case PMode::Constant: return "constant";
    case PMode::StepDecay: return "step";
    case PMode::Linear: return "linear";
  }
  return "?";
}

inline PMode p_mode_from_name(const std::string& name) {
  if (name == "constant") return PMode::Constant;
  if (name == "step") return PMode::StepDecay;
  if (name == "linear") return PMode::Linear;
  throw ConfigError("unknown p-schedule mode \"" + name +
                    "\": valid modes are constant, step, linear");
}

// Non-increasing schedule for p in [0, 0.5]. Step-decay mirrors lr_at and
// clamps below at p_end; linear interpolates p_start -> p_end over
// total_epochs and then holds p_end.
struct PSchedule {
  PMode mode = PMode::Constant;
  double p_start = 0.125;
  double p_end = 0.125;
  double factor = 0.1;                  // step-decay mode
  std::vector<std::size_t> milestones;  // step-decay mode
  std::size_t total_epochs = 1;         // linear mode
};

inline void validate_pschedule(const PSchedule& s) {
  if (!(s.p_start >= 0.0 && s.p_start <= 0.5))
    throw ConfigError("p-schedule: p_start must be in [0, 0.5], got " +
                      std::to_string(s.p_start));
  if (s.mode == PMode::Constant) return;
  if (!(s.p_end >= 0.0 && s.p_end <= s.p_start))
    throw ConfigError("p-schedule: p_end must be in [0, p_start], got " +
                      std::to_string(s.p_end));
  if (s.mode == PMode::StepDecay) {
    validate_schedule(StepDecaySchedule{std::max(s.p_start, 1e-300), s.factor, s.milestones});
  } else if (s.total_epochs < 1) {
    throw ConfigError("p-schedule: total_epochs must be >= 1 for linear mode");
  }
}

inline double p_at(const PSchedule& s, std::size_t epoch) {
  switch (s.mode) {
    case PMode::Constant:
      return s.p_start;
    case PMode::StepDecay: {
      const auto hits = std::upper_bound(s.milestones.begin(), s.milestones.end(), epoch) -
                        s.milestones.begin();
      return std::max(s.p_end, s.p_start * std::pow(s.factor, static_cast<double>(hits)));
    }
    case PMode::Linear: {
      if (epoch >= s.total_epochs) return s.p_end;
      const double frac = static_cast<double>(epoch) / static_cast<double>(s.total_epochs);
      return s.p_start + (s.p_end - s.p_start) * frac;
    }
  }
  return s.p_start;
}

}  // namespace padam
