#include "crowdstream/metrics.hpp"

namespace crowdstream {

double degradation_volume(std::span<const double> bitrates) {
  double volume = 0.0;
  for (std::size_t i = 1; i < bitrates.size(); ++i) {
    if (bitrates[i] < bitrates[i - 1]) volume += bitrates[i - 1] - bitrates[i];
  }
  return volume;
}

double degradation_ratio(std::span<const double> bitrates) {
  double total = 0.0;
  for (double r : bitrates) total += r;
  if (total == 0.0) return 0.0;
  return degradation_volume(bitrates) / total;
}

double rebuffer_ratio(double stall_s, double video_length_s) {
  if (video_length_s <= 0.0) return 0.0;
  return stall_s / video_length_s;
}

}  // namespace crowdstream
