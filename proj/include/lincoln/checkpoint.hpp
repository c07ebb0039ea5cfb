#ifndef LINCOLN_CHECKPOINT_HPP
#define LINCOLN_CHECKPOINT_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "lincoln/errors.hpp"
#include "lincoln/inter_encoder.hpp"
#include "lincoln/param_store.hpp"

namespace lincoln {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format writes little-endian doubles directly");

// Model state sufficient to resume evaluation mid-sequence: parameters with
// optimizer state, per-layer hidden states with seen flags, time rescaling.
struct Checkpoint {
    std::uint32_t version = 1;
    std::uint64_t d = 0;
    std::uint64_t k = 0;
    std::string intermediate_layers;
    double time_offset = 0.0;
    double time_unit = 1.0;
    ParamStore params;
    HiddenStates hidden;
};

namespace detail {

constexpr std::uint32_t kCheckpointMagic = 0x4b434e4cu; // "LNCK"

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) raise(ErrorCode::IoError, "truncated checkpoint");
    return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_pod<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
    const auto n = read_pod<std::uint64_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) raise(ErrorCode::IoError, "truncated checkpoint string");
    return s;
}

inline void write_tensor(std::ostream& out, const Tensor& t) {
    write_pod<std::uint64_t>(out, t.rows());
    write_pod<std::uint64_t>(out, t.cols());
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
}

inline Tensor read_tensor(std::istream& in) {
    const auto rows = read_pod<std::uint64_t>(in);
    const auto cols = read_pod<std::uint64_t>(in);
    Tensor t(rows, cols);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) raise(ErrorCode::IoError, "truncated checkpoint tensor");
    return t;
}

} // namespace detail

inline void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
    detail::write_pod(out, detail::kCheckpointMagic);
    detail::write_pod(out, ckpt.version);
    detail::write_pod(out, ckpt.d);
    detail::write_pod(out, ckpt.k);
    detail::write_string(out, ckpt.intermediate_layers);
    detail::write_pod(out, ckpt.time_offset);
    detail::write_pod(out, ckpt.time_unit);

    detail::write_pod<std::uint64_t>(out, ckpt.params.entries().size());
    for (const auto& [name, e] : ckpt.params.entries()) {
        detail::write_string(out, name);
        detail::write_pod<std::int64_t>(out, e.step);
        detail::write_tensor(out, e.value);
        detail::write_tensor(out, e.m);
        detail::write_tensor(out, e.v);
    }

    detail::write_pod<std::uint64_t>(out, ckpt.hidden.layers.size());
    for (const auto& layer : ckpt.hidden.layers) detail::write_tensor(out, layer);
    detail::write_pod<std::uint64_t>(out, ckpt.hidden.seen.size());
    out.write(reinterpret_cast<const char*>(ckpt.hidden.seen.data()),
              static_cast<std::streamsize>(ckpt.hidden.seen.size()));
    if (!out) raise(ErrorCode::IoError, "checkpoint write failed");
}

inline Checkpoint load_checkpoint(std::istream& in) {
    if (detail::read_pod<std::uint32_t>(in) != detail::kCheckpointMagic)
        raise(ErrorCode::IoError, "not a checkpoint file");
    Checkpoint ckpt;
    ckpt.version = detail::read_pod<std::uint32_t>(in);
    if (ckpt.version != 1) raise(ErrorCode::IoError, "unsupported checkpoint version");
    ckpt.d = detail::read_pod<std::uint64_t>(in);
    ckpt.k = detail::read_pod<std::uint64_t>(in);
    ckpt.intermediate_layers = detail::read_string(in);
    ckpt.time_offset = detail::read_pod<double>(in);
    ckpt.time_unit = detail::read_pod<double>(in);

    const auto n_params = detail::read_pod<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < n_params; ++i) {
        const std::string name = detail::read_string(in);
        const auto step = detail::read_pod<std::int64_t>(in);
        Tensor value = detail::read_tensor(in);
        Tensor m = detail::read_tensor(in);
        Tensor v = detail::read_tensor(in);
        ckpt.params.create(name, std::move(value));
        auto& entry = ckpt.params.entries().at(name);
        entry.step = step;
        entry.m = std::move(m);
        entry.v = std::move(v);
    }

    const auto n_layers = detail::read_pod<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < n_layers; ++i)
        ckpt.hidden.layers.push_back(detail::read_tensor(in));
    const auto n_seen = detail::read_pod<std::uint64_t>(in);
    ckpt.hidden.seen.resize(n_seen);
    in.read(reinterpret_cast<char*>(ckpt.hidden.seen.data()),
            static_cast<std::streamsize>(n_seen));
    if (!in) raise(ErrorCode::IoError, "truncated checkpoint");
    return ckpt;
}

} // namespace lincoln

#endif // LINCOLN_CHECKPOINT_HPP
