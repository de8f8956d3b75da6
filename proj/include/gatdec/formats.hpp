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

#ifndef GATDEC_FORMATS_HPP
#define GATDEC_FORMATS_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gatdec/errors.hpp"

namespace gatdec {

/// Row-major bit matrix, one row per shot.
class ShotTable {
   public:
    ShotTable() = default;
    ShotTable(size_t n_shots, size_t n_bits) : n_shots_(n_shots), n_bits_(n_bits), bits_(n_shots * n_bits, 0) {
    }
    ShotTable(size_t n_shots, size_t n_bits, std::vector<uint8_t> bits)
        : n_shots_(n_shots), n_bits_(n_bits), bits_(std::move(bits)) {
        if (bits_.size() != n_shots_ * n_bits_) {
            throw DimensionError(
                "ShotTable expects " + std::to_string(n_shots_ * n_bits_) + " bits but got " +
                std::to_string(bits_.size()));
        }
        for (auto &b : bits_) {
            if (b > 1) {
                throw DimensionError("ShotTable bits must be 0 or 1");
            }
        }
    }

    size_t n_shots() const {
        return n_shots_;
    }
    size_t n_bits() const {
        return n_bits_;
    }

    uint8_t get(size_t shot, size_t bit) const {
        return bits_[shot * n_bits_ + bit];
    }
    void set(size_t shot, size_t bit, bool value) {
        bits_[shot * n_bits_ + bit] = value ? 1 : 0;
    }

    std::span<const uint8_t> row(size_t shot) const {
        return {bits_.data() + shot * n_bits_, n_bits_};
    }

    const std::vector<uint8_t> &bits() const {
        return bits_;
    }

    /// Copies the selected shots, in the given order, into a new table.
    ShotTable select(std::span<const size_t> shots) const {
        ShotTable out(shots.size(), n_bits_);
        for (size_t k = 0; k < shots.size(); k++) {
            auto r = row(shots[k]);
            std::copy(r.begin(), r.end(), out.bits_.begin() + k * n_bits_);
        }
        return out;
    }

    bool operator==(const ShotTable &other) const = default;

   private:
    size_t n_shots_ = 0;
    size_t n_bits_ = 0;
    std::vector<uint8_t> bits_;
};

inline size_t b8_stride(size_t n_bits) {
    return (n_bits + 7) / 8;
}

/// Bit k of shot s lives in byte s*stride + k/8 at position k%8, LSB first.
inline ShotTable parse_b8(std::span<const uint8_t> bytes, size_t n_bits) {
    size_t stride = b8_stride(n_bits);
    if (stride == 0) {
        if (!bytes.empty()) {
            throw FormatError("b8 data with n_bits=0 must be empty but has " + std::to_string(bytes.size()) + " bytes");
        }
        return ShotTable(0, 0);
    }
    if (bytes.size() % stride != 0) {
        size_t expected = (bytes.size() / stride + 1) * stride;
        throw FormatError(
            "b8 length " + std::to_string(bytes.size()) + " is not a multiple of the shot stride " +
            std::to_string(stride) + " (n_bits=" + std::to_string(n_bits) + "); expected " +
            std::to_string(expected - stride) + " or " + std::to_string(expected) + " bytes");
    }
    size_t n_shots = bytes.size() / stride;
    ShotTable table(n_shots, n_bits);
    for (size_t s = 0; s < n_shots; s++) {
        const uint8_t *shot = bytes.data() + s * stride;
        for (size_t k = 0; k < n_bits; k++) {
            table.set(s, k, (shot[k >> 3] >> (k & 7)) & 1);
        }
    }
    return table;
}

inline std::vector<uint8_t> write_b8(const ShotTable &table) {
    size_t stride = b8_stride(table.n_bits());
    std::vector<uint8_t> out(table.n_shots() * stride, 0);
    for (size_t s = 0; s < table.n_shots(); s++) {
        uint8_t *shot = out.data() + s * stride;
        for (size_t k = 0; k < table.n_bits(); k++) {
            if (table.get(s, k)) {
                shot[k >> 3] |= uint8_t(1u << (k & 7));
            }
        }
    }
    return out;
}

/// One shot per line of '0'/'1' characters. A trailing '\r' is tolerated.
inline ShotTable parse_01(std::string_view text) {
    std::vector<uint8_t> bits;
    std::optional<size_t> width;
    size_t n_shots = 0;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        line_no++;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        if (width.has_value() && *width != line.size()) {
            throw FormatError(
                "01 line " + std::to_string(line_no) + " has " + std::to_string(line.size()) +
                " bits but earlier lines have " + std::to_string(*width));
        }
        width = line.size();
        for (size_t k = 0; k < line.size(); k++) {
            char c = line[k];
            if (c != '0' && c != '1') {
                throw FormatError(
                    "01 line " + std::to_string(line_no) + " column " + std::to_string(k + 1) +
                    ": unexpected character '" + std::string(1, c) + "'");
            }
            bits.push_back(c == '1');
        }
        n_shots++;
    }
    return ShotTable(n_shots, width.value_or(0), std::move(bits));
}

inline std::string write_01(const ShotTable &table) {
    std::string out;
    out.reserve(table.n_shots() * (table.n_bits() + 1));
    for (size_t s = 0; s < table.n_shots(); s++) {
        for (uint8_t b : table.row(s)) {
            out.push_back(b ? '1' : '0');
        }
        out.push_back('\n');
    }
    return out;
}

struct DetectorInfo {
    uint64_t id = 0;
    /// The last coordinate is time.
    std::vector<double> coords;

    bool operator==(const DetectorInfo &) const = default;
};

struct ErrorMechanism {
    double probability = 0;
    std::vector<uint64_t> detectors;  // sorted, unique
    std::vector<uint64_t> observables;  // sorted, unique

    bool operator==(const ErrorMechanism &) const = default;
};

/// A flat detector error model: independent mechanisms plus detector coordinates.
struct DetectorModel {
    size_t n_detectors = 0;
    size_t n_observables = 0;
    std::vector<DetectorInfo> detectors;  // declaration order
    std::vector<ErrorMechanism> mechanisms;

    const DetectorInfo *find_detector(uint64_t id) const {
        for (const auto &d : detectors) {
            if (d.id == id) {
                return &d;
            }
        }
        return nullptr;
    }

    bool operator==(const DetectorModel &) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) {
        return {};
    }
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] inline void dem_fail(size_t line_no, const std::string &msg) {
    throw FormatError("DEM line " + std::to_string(line_no) + ": " + msg);
}

inline double parse_real(std::string_view s, size_t line_no) {
    std::string tmp(trim(s));
    if (tmp.empty()) {
        dem_fail(line_no, "empty numeric argument");
    }
    size_t used = 0;
    double v;
    try {
        v = std::stod(tmp, &used);
    } catch (const std::exception &) {
        dem_fail(line_no, "bad numeric argument '" + tmp + "'");
    }
    if (used != tmp.size()) {
        dem_fail(line_no, "bad numeric argument '" + tmp + "'");
    }
    return v;
}

inline uint64_t parse_index(std::string_view s, size_t line_no) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string_view::npos) {
        dem_fail(line_no, "bad index '" + std::string(s) + "'");
    }
    try {
        return std::stoull(std::string(s));
    } catch (const std::exception &) {
        dem_fail(line_no, "index out of range '" + std::string(s) + "'");
    }
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) {
            i++;
        }
        size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') {
            j++;
        }
        if (j > i) {
            out.push_back(s.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

/// Toggles `v` in a sorted set (XOR semantics).
inline void toggle_sorted(std::vector<uint64_t> &set, uint64_t v) {
    auto it = std::lower_bound(set.begin(), set.end(), v);
    if (it != set.end() && *it == v) {
        set.erase(it);
    } else {
        set.insert(it, v);
    }
}

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Parses the flat DEM instruction set: error, detector, logical_observable,
/// shift_detectors and '#' comments. repeat blocks are rejected.
inline DetectorModel parse_dem(std::string_view text) {
    DetectorModel model;
    uint64_t det_offset = 0;
    std::vector<double> coord_offset;
    std::optional<uint64_t> max_det;
    std::optional<uint64_t> max_obs;
    auto see_det = [&](uint64_t d) { max_det = std::max(max_det.value_or(0), d); };
    auto see_obs = [&](uint64_t o) { max_obs = std::max(max_obs.value_or(0), o); };

    size_t line_no = 0;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        line_no++;

        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }

        size_t name_end = line.find_first_of("( \t{");
        std::string_view name = line.substr(0, name_end);
        std::string_view rest = name_end == std::string_view::npos ? std::string_view{} : line.substr(name_end);

        std::vector<double> args;
        bool has_args = false;
        rest = detail::trim(rest);
        if (!rest.empty() && rest.front() == '(') {
            size_t close = rest.find(')');
            if (close == std::string_view::npos) {
                detail::dem_fail(line_no, "missing ')'");
            }
            has_args = true;
            std::string_view inner = detail::trim(rest.substr(1, close - 1));
            if (!inner.empty()) {
                size_t p = 0;
                while (true) {
                    size_t comma = inner.find(',', p);
                    args.push_back(detail::parse_real(inner.substr(p, comma - p), line_no));
                    if (comma == std::string_view::npos) {
                        break;
                    }
                    p = comma + 1;
                }
            }
            rest = rest.substr(close + 1);
        }
        auto targets = detail::split_ws(rest);

        if (name == "repeat") {
            detail::dem_fail(line_no, "unsupported instruction 'repeat' (flatten the model first)");
        } else if (name == "error") {
            if (!has_args || args.size() != 1) {
                detail::dem_fail(line_no, "error instruction takes exactly one probability argument");
            }
            double p = args[0];
            if (!(p >= 0 && p <= 1)) {
                detail::dem_fail(line_no, "error probability " + detail::format_real(p) + " outside [0, 1]");
            }
            ErrorMechanism m;
            m.probability = p;
            for (auto t : targets) {
                if (t == "^") {
                    continue;
                }
                if (t.front() == 'D') {
                    uint64_t d = detail::parse_index(t.substr(1), line_no) + det_offset;
                    see_det(d);
                    detail::toggle_sorted(m.detectors, d);
                } else if (t.front() == 'L') {
                    uint64_t o = detail::parse_index(t.substr(1), line_no);
                    see_obs(o);
                    detail::toggle_sorted(m.observables, o);
                } else {
                    detail::dem_fail(line_no, "bad error target '" + std::string(t) + "'");
                }
            }
            model.mechanisms.push_back(std::move(m));
        } else if (name == "detector") {
            if (targets.empty()) {
                detail::dem_fail(line_no, "detector instruction without targets");
            }
            for (auto t : targets) {
                if (t.front() != 'D') {
                    detail::dem_fail(line_no, "bad detector target '" + std::string(t) + "'");
                }
                DetectorInfo info;
                info.id = detail::parse_index(t.substr(1), line_no) + det_offset;
                info.coords = args;
                for (size_t k = 0; k < info.coords.size() && k < coord_offset.size(); k++) {
                    info.coords[k] += coord_offset[k];
                }
                if (const auto *prev = model.find_detector(info.id)) {
                    if (prev->coords != info.coords) {
                        detail::dem_fail(line_no, "detector D" + std::to_string(info.id) + " redeclared with different coordinates");
                    }
                    continue;
                }
                see_det(info.id);
                model.detectors.push_back(std::move(info));
            }
        } else if (name == "logical_observable") {
            for (auto t : targets) {
                if (t.front() != 'L') {
                    detail::dem_fail(line_no, "bad observable target '" + std::string(t) + "'");
                }
                see_obs(detail::parse_index(t.substr(1), line_no));
            }
        } else if (name == "shift_detectors") {
            if (targets.size() != 1) {
                detail::dem_fail(line_no, "shift_detectors takes exactly one detector offset");
            }
            det_offset += detail::parse_index(targets[0], line_no);
            if (coord_offset.size() < args.size()) {
                coord_offset.resize(args.size(), 0.0);
            }
            for (size_t k = 0; k < args.size(); k++) {
                coord_offset[k] += args[k];
            }
        } else {
            detail::dem_fail(line_no, "unknown instruction '" + std::string(name) + "'");
        }
    }
    model.n_detectors = max_det.has_value() ? *max_det + 1 : 0;
    model.n_observables = max_obs.has_value() ? *max_obs + 1 : 0;
    return model;
}

/// Writes a flat DEM that parses back to an equal model.
inline std::string write_dem(const DetectorModel &model) {
    std::string out;
    for (const auto &m : model.mechanisms) {
        out += "error(" + detail::format_real(m.probability) + ")";
        for (auto d : m.detectors) {
            out += " D" + std::to_string(d);
        }
        for (auto o : m.observables) {
            out += " L" + std::to_string(o);
        }
        out += "\n";
    }
    for (const auto &d : model.detectors) {
        out += "detector";
        if (!d.coords.empty()) {
            out += "(";
            for (size_t k = 0; k < d.coords.size(); k++) {
                if (k) {
                    out += ", ";
                }
                out += detail::format_real(d.coords[k]);
            }
            out += ")";
        }
        out += " D" + std::to_string(d.id) + "\n";
    }
    if (model.n_observables > 0) {
        out += "logical_observable L" + std::to_string(model.n_observables - 1) + "\n";
    }
    return out;
}

inline std::string read_text_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<uint8_t> read_binary_file(const std::string &path) {
    std::string s = read_text_file(path);
    return {s.begin(), s.end()};
}

inline void write_file(const std::string &path, std::string_view data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open '" + path + "' for writing");
    }
    out.write(data.data(), std::streamsize(data.size()));
    if (!out) {
        throw FormatError("failed writing '" + path + "'");
    }
}

inline void write_file(const std::string &path, std::span<const uint8_t> data) {
    write_file(path, std::string_view(reinterpret_cast<const char *>(data.data()), data.size()));
}

}  // namespace gatdec

#endif
