// Copyright 2026 The gatdec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef GATDEC_SAMPLER_HPP
#define GATDEC_SAMPLER_HPP

#include <cstdint>
#include <utility>

#include "gatdec/errors.hpp"
#include "gatdec/formats.hpp"
#include "gatdec/random.hpp"

namespace gatdec {

struct SampledShots {
    ShotTable detections;
    ShotTable observables;
};

/// Monte-Carlo shots from independent mechanisms. Mechanism m fires in shot s
/// iff counter_uniform(seed, s, m) < p_m, so shot s does not depend on how
/// many shots are requested.
inline SampledShots sample(const DetectorModel &model, size_t n_shots, uint64_t seed) {
    for (const auto &mech : model.mechanisms) {
        if (!(mech.probability >= 0 && mech.probability <= 1)) {
            throw ValidationError("mechanism probability outside [0, 1]");
        }
    }
    SampledShots out{ShotTable(n_shots, model.n_detectors), ShotTable(n_shots, model.n_observables)};
    for (size_t s = 0; s < n_shots; s++) {
        for (size_t m = 0; m < model.mechanisms.size(); m++) {
            const auto &mech = model.mechanisms[m];
            if (!(counter_uniform(seed, s, m) < mech.probability)) {
                continue;
            }
            for (auto d : mech.detectors) {
                out.detections.set(s, d, !out.detections.get(s, d));
            }
            for (auto o : mech.observables) {
                out.observables.set(s, o, !out.observables.get(s, o));
            }
        }
    }
    return out;
}

}  // namespace gatdec

#endif
