#include "hookmil/bag_io.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "hookmil/errors.hpp"
#include "wire.hpp"

namespace hookmil {

namespace {
constexpr char kMagic[4] = {'H', 'K', 'B', '1'};
constexpr std::uint16_t kBagVersion = 1;
}  // namespace

BagFeatures read_bag(const std::string& path) {
    const std::string bytes = wire::read_file_bytes(path);
    wire::ByteReader r(bytes, "bag file " + path);

    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError("bag file " + path + ": bad magic");
    const std::uint16_t version = r.u16();
    if (version != kBagVersion)
        throw ParseError("bag file " + path + ": unsupported version " +
                         std::to_string(version));
    r.u16();  // reserved
    const std::uint64_t n = r.u64();
    const std::uint64_t d = r.u64();
    if (n == 0 || d == 0)
        throw ParseError("bag file " + path + ": empty shape " +
                         std::to_string(n) + "x" + std::to_string(d));
    // Shapes whose element count cannot be addressed are rejected before any
    // allocation is attempted.
    if (n > std::numeric_limits<std::uint64_t>::max() / d ||
        n * d > std::numeric_limits<std::size_t>::max() / sizeof(double))
        throw ParseError("bag file " + path + ": shape overflow (" +
                         std::to_string(n) + "x" + std::to_string(d) + ")");
    const std::uint64_t count = n * d;
    if (r.remaining() < count * 4)
        throw ParseError("bag file " + path + ": truncated payload (header "
                         "declares " + std::to_string(count) +
                         " values, file holds " +
                         std::to_string(r.remaining() / 4) + ")");

    BagFeatures bag;
    bag.features = Matrix(static_cast<std::size_t>(n),
                          static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < bag.features.size(); ++i)
        bag.features.data()[i] = static_cast<double>(r.f32());
    return bag;
}

void write_bag(const std::string& path, const Matrix& features) {
    if (features.rows() == 0 || features.cols() == 0)
        throw IoError("write_bag: refusing to write empty bag " + path);

    std::string out;
    out.reserve(24 + features.size() * 4);
    out.append(kMagic, 4);
    wire::put_u16(out, kBagVersion);
    wire::put_u16(out, 0);
    wire::put_u64(out, features.rows());
    wire::put_u64(out, features.cols());
    for (std::size_t i = 0; i < features.size(); ++i)
        wire::put_f32(out, static_cast<float>(features.data()[i]));
    wire::write_file_bytes(path, out);
}

std::vector<ManifestEntry> read_manifest(const std::string& path,
                                         int num_classes) {
    if (num_classes < 1)
        throw ConfigError("read_manifest: num_classes must be positive");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path);

    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos
                                                : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos ||
            line.find('\t', t2 + 1) != std::string::npos)
            throw ParseError("manifest " + path + " line " +
                             std::to_string(line_no) +
                             ": expected bag_path<TAB>label<TAB>bag_id");

        ManifestEntry e;
        e.bag_path = line.substr(0, t1);
        const std::string label_text = line.substr(t1 + 1, t2 - t1 - 1);
        e.bag_id = line.substr(t2 + 1);
        if (e.bag_path.empty() || e.bag_id.empty())
            throw ParseError("manifest " + path + " line " +
                             std::to_string(line_no) +
                             ": empty bag_path or bag_id");
        try {
            std::size_t used = 0;
            e.label = std::stoi(label_text, &used);
            if (used != label_text.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ParseError("manifest " + path + " line " +
                             std::to_string(line_no) + ": bad label '" +
                             label_text + "'");
        }
        if (e.label < 0 || e.label >= num_classes)
            throw ParseError("manifest " + path + " line " +
                             std::to_string(line_no) + ": label " +
                             std::to_string(e.label) + " outside [0, " +
                             std::to_string(num_classes) + ")");
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
    std::string out;
    for (const ManifestEntry& e : entries) {
        out += e.bag_path;
        out += '\t';
        out += std::to_string(e.label);
        out += '\t';
        out += e.bag_id;
        out += '\n';
    }
    wire::write_file_bytes(path, out);
}

std::vector<BagFeatures> load_dataset(const std::string& manifest_path,
                                      int num_classes) {
    const std::vector<ManifestEntry> entries =
        read_manifest(manifest_path, num_classes);
    const std::filesystem::path base =
        std::filesystem::path(manifest_path).parent_path();

    std::vector<BagFeatures> bags;
    bags.reserve(entries.size());
    for (const ManifestEntry& e : entries) {
        std::filesystem::path bag_path(e.bag_path);
        if (bag_path.is_relative()) bag_path = base / bag_path;
        BagFeatures bag = read_bag(bag_path.string());
        if (!all_finite(bag.features))
            throw ParseError("bag " + bag_path.string() +
                             ": non-finite feature values");
        bag.label = e.label;
        bag.bag_id = e.bag_id;
        bags.push_back(std::move(bag));
    }
    return bags;
}

}  // namespace hookmil
