#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "crowdsense/pipeline.hpp"
#include "crowdsense/simulator.hpp"

namespace crowdsense {

/// Simulator and observation-noise settings used by `simulate` and `bench`.
struct ScenarioSettings {
  sim::ScenarioOverrides overrides;
  sim::NoiseModel noise;
};

struct ConfigKey {
  std::string name;
  std::string unit;
  std::string help;
};

/// Flat `key = value` settings with dotted section prefixes. Durations and
/// speeds are given per second and converted through `fps` on resolution,
/// so the order in which keys are set does not matter. Every change is
/// validated against the module invariants immediately.
class RunConfig {
 public:
  /// `#` starts a comment. Throws ParseError for malformed lines and
  /// ConfigError for unknown keys or invalid values.
  static RunConfig parse(std::istream& in);

  /// Throws ConfigError; the config is unchanged on failure.
  void set(const std::string& key, const std::string& value);

  /// Parses "key=value" as given on the command line.
  void set_assignment(const std::string& assignment);

  double fps() const;
  std::uint64_t seed() const;
  PipelineConfig pipeline() const;
  ScenarioSettings scenario() const;

  const std::map<std::string, std::string>& values() const { return values_; }

  static const std::vector<ConfigKey>& keys();

 private:
  std::map<std::string, std::string> values_;
};

/// Independent stream seed for `purpose`, derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);

}  // namespace crowdsense
