#include "hookmil/checkpoint.hpp"

#include <cstring>
#include <limits>
#include <set>

#include "wire.hpp"

namespace hookmil {

namespace {
constexpr char kMagic[4] = {'H', 'K', 'C', 'K'};
constexpr std::uint16_t kCheckpointVersion = 1;
}  // namespace

void write_checkpoint(const std::string& path,
                      const CheckpointPayload& payload) {
    if (payload.tensors.size() >
        std::numeric_limits<std::uint32_t>::max())
        throw IoError("write_checkpoint: too many tensors");

    std::string out;
    out.append(kMagic, 4);
    wire::put_u16(out, kCheckpointVersion);
    wire::put_u32(out, static_cast<std::uint32_t>(payload.config_text.size()));
    out += payload.config_text;
    wire::put_u32(out, static_cast<std::uint32_t>(payload.tensors.size()));
    for (const auto& [name, m] : payload.tensors) {
        if (name.empty() || name.size() > std::numeric_limits<std::uint16_t>::max())
            throw IoError("write_checkpoint: bad tensor name '" + name + "'");
        wire::put_u16(out, static_cast<std::uint16_t>(name.size()));
        out += name;
        wire::put_u64(out, m.rows());
        wire::put_u64(out, m.cols());
        for (std::size_t i = 0; i < m.size(); ++i)
            wire::put_f64(out, m.data()[i]);
    }
    wire::write_file_bytes(path, out);
}

CheckpointPayload read_checkpoint(const std::string& path) {
    const std::string bytes = wire::read_file_bytes(path);
    wire::ByteReader r(bytes, "checkpoint " + path);

    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError("checkpoint " + path + ": bad magic");
    const std::uint16_t version = r.u16();
    if (version != kCheckpointVersion)
        throw ParseError("checkpoint " + path + ": unsupported version " +
                         std::to_string(version));

    CheckpointPayload payload;
    payload.config_text = r.str(r.u32());
    const std::uint32_t count = r.u32();
    payload.tensors.reserve(count);
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::string name = r.str(r.u16());
        const std::uint64_t rows = r.u64();
        const std::uint64_t cols = r.u64();
        if (rows == 0 || cols == 0 ||
            rows > std::numeric_limits<std::size_t>::max() / cols ||
            rows * cols > r.remaining() / 8)
            throw ParseError("checkpoint " + path + ": tensor '" + name +
                             "' has invalid shape " + std::to_string(rows) +
                             "x" + std::to_string(cols));
        Matrix m(static_cast<std::size_t>(rows),
                 static_cast<std::size_t>(cols));
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
        payload.tensors.emplace_back(name, std::move(m));
    }
    if (r.remaining() != 0)
        throw ParseError("checkpoint " + path + ": " +
                         std::to_string(r.remaining()) +
                         " trailing bytes after last tensor");
    return payload;
}

std::vector<std::pair<std::string, Matrix>> snapshot_tensors(
    const ModelParams& params) {
    std::vector<std::pair<std::string, Matrix>> tensors;
    for_each_param(params, [&](const std::string& name, const Matrix& m) {
        tensors.emplace_back(name, m);
    });
    return tensors;
}

void fill_params(ModelParams& params,
                 const std::vector<std::pair<std::string, Matrix>>& tensors) {
    std::set<std::string> used;
    std::set<std::string> expected;
    for_each_param(params, [&](const std::string& name, const Matrix&) {
        expected.insert(name);
    });
    for (const auto& [name, m] : tensors) {
        if (!expected.count(name))
            throw ParseError("fill_params: unknown tensor '" + name + "'");
        if (!used.insert(name).second)
            throw ParseError("fill_params: duplicate tensor '" + name + "'");
        for_each_param(params, [&](const std::string& n, Matrix& slot) {
            if (n != name) return;
            if (!slot.same_shape(m))
                throw DimensionError("fill_params: tensor '" + name +
                                     "' is " + shape_str(m) +
                                     ", model expects " + shape_str(slot));
            slot = m;
        });
    }
    if (used.size() != expected.size()) {
        for (const std::string& name : expected)
            if (!used.count(name))
                throw ParseError("fill_params: missing tensor '" + name + "'");
    }
}

}  // namespace hookmil
