#include "vfpid/types.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace vfpid {

std::string to_string(const FlightState& k) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "(k1=%g, k2=%g)", k.airspeed, k.aoa);
  return buf;
}

void validate_record(const SignalRecord& record) {
  if (record.samples.size() < 2)
    throw std::invalid_argument("signal record " + to_string(record.state) +
                                ": fewer than 2 samples");
  if (!(record.fs > 0.0))
    throw std::invalid_argument("signal record " + to_string(record.state) +
                                ": sampling rate must be positive");
  for (double v : record.samples)
    if (!std::isfinite(v))
      throw std::invalid_argument("signal record " + to_string(record.state) +
                                  ": non-finite sample");
}

SignalPool make_pool(std::vector<SignalRecord> records) {
  if (records.empty()) throw std::invalid_argument("pool: no records");
  std::set<FlightState> states;
  const std::size_t n = records.front().samples.size();
  const double fs = records.front().fs;
  for (const auto& record : records) {
    validate_record(record);
    if (record.samples.size() != n)
      throw std::invalid_argument("pool: inconsistent lengths (" + to_string(record.state) +
                                  " has " + std::to_string(record.samples.size()) +
                                  " samples, expected " + std::to_string(n) + ")");
    if (record.fs != fs)
      throw std::invalid_argument("pool: inconsistent sampling rates at " +
                                  to_string(record.state));
    if (!states.insert(record.state).second)
      throw std::invalid_argument("pool: duplicate flight state " + to_string(record.state));
  }
  SignalPool pool;
  pool.records = std::move(records);
  pool.n_samples = n;
  pool.fs = fs;
  return pool;
}

}  // namespace vfpid
