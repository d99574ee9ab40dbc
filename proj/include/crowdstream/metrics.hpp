#pragma once

#include <span>

namespace crowdstream {

// Sum of bitrate drops between consecutive segments.
double degradation_volume(std::span<const double> bitrates);

// Drop volume over the summed bitrates of all segments; 0 for an empty sequence.
double degradation_ratio(std::span<const double> bitrates);

double rebuffer_ratio(double stall_s, double video_length_s);

}  // namespace crowdstream
