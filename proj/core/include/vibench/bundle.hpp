#pragma once

#include <string>

#include "vibench/detectors.hpp"

namespace vibench {

/// Serialized trained detector. Container layout: 8-byte magic "VIBMDL01",
/// uint32 LE header length, JSON header (kind, hyperparameters, shape,
/// train_dim, seed, norm_stats reference), then every model parameter as
/// little-endian float64. Integer fields ride in the float64 stream (all are
/// far below 2^53), so a round trip reproduces the model bit for bit; the
/// autoencoder training-loss trace is deliberately not persisted.
struct LoadedModel {
    AnomalyModel model;
    std::string norm_stats_ref; // path hint for the matching feature norm, may be empty
};

void save_model(const AnomalyModel& model, const std::string& path,
                const std::string& norm_stats_ref = "");

/// Throws DataError("ParseError: ...") on wrong magic, version, truncation
/// or header/blob disagreement.
LoadedModel load_model(const std::string& path);

} // namespace vibench
