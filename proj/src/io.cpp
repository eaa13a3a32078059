#include "placerec/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace placerec {

static_assert(std::endian::native == std::endian::little,
              "serializers assume a little-endian host");

const char* to_string(IoErrorKind kind) {
    switch (kind) {
        case IoErrorKind::bad_magic: return "bad_magic";
        case IoErrorKind::bad_version: return "bad_version";
        case IoErrorKind::truncated: return "truncated";
        case IoErrorKind::shape_mismatch: return "shape_mismatch";
        case IoErrorKind::trailing_data: return "trailing_data";
        case IoErrorKind::malformed_text: return "malformed_text";
        case IoErrorKind::io_failure: return "io_failure";
    }
    return "unknown";
}

const char* to_string(Modality m) {
    return m == Modality::lidar ? "lidar" : "radar";
}

namespace {

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f32(float v) { raw(&v, 4); }
    void f64(double v) { raw(&v, 8); }
    void magic(const char tag[5]) { raw(tag, 4); }

    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}

    std::uint8_t u8() { return take<std::uint8_t>(); }
    std::uint32_t u32() { return take<std::uint32_t>(); }
    std::uint64_t u64() { return take<std::uint64_t>(); }
    float f32() { return take<float>(); }
    double f64() { return take<double>(); }

    void expect_magic(const char tag[5]) {
        char got[4];
        if (buf_.size() - pos_ < 4)
            throw IoError(IoErrorKind::truncated, "file shorter than its magic tag");
        std::memcpy(got, buf_.data() + pos_, 4);
        pos_ += 4;
        if (std::memcmp(got, tag, 4) != 0)
            throw IoError(IoErrorKind::bad_magic,
                          std::string("expected magic '") + tag + "'");
    }

    void expect_version(std::uint32_t want) {
        const std::uint32_t got = u32();
        if (got != want)
            throw IoError(IoErrorKind::bad_version,
                          "unsupported format version " + std::to_string(got));
    }

    std::size_t remaining() const { return buf_.size() - pos_; }

    /// Validates an element count against the bytes actually present,
    /// before anything is allocated from it.
    void require_exact_payload(std::uint64_t count, std::size_t elem_size) {
        if (count > remaining() / elem_size)
            throw IoError(IoErrorKind::truncated,
                          "payload of " + std::to_string(count) +
                              " elements exceeds the bytes present");
    }

    void finish() {
        if (pos_ != buf_.size())
            throw IoError(IoErrorKind::trailing_data,
                          std::to_string(remaining()) + " trailing bytes");
    }

private:
    template <typename T>
    T take() {
        if (remaining() < sizeof(T))
            throw IoError(IoErrorKind::truncated, "unexpected end of file");
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    const std::vector<std::uint8_t>& buf_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(IoErrorKind::io_failure, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError(IoErrorKind::io_failure, "read failed for " + path.string());
    return bytes;
}

void atomic_write_file(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError(IoErrorKind::io_failure, "cannot create " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out)
            throw IoError(IoErrorKind::io_failure, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError(IoErrorKind::io_failure,
                      "rename to " + path.string() + " failed: " + ec.message());
}

std::filesystem::path indexed_file(const std::filesystem::path& dir,
                                   std::size_t index) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.bin", index);
    return dir / name;
}

// --- point clouds ---

std::vector<std::uint8_t> encode_point_cloud(const PointCloud3D& cloud) {
    ByteWriter w;
    w.magic("PLCD");
    w.u32(1);
    w.u64(cloud.points.size());
    for (const Point3D& p : cloud.points) {
        w.f64(p.x);
        w.f64(p.y);
        w.f64(p.z);
    }
    return w.take();
}

PointCloud3D decode_point_cloud(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    r.expect_magic("PLCD");
    r.expect_version(1);
    const std::uint64_t count = r.u64();
    r.require_exact_payload(count, 24);
    PointCloud3D cloud;
    cloud.points.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        cloud.points[i].x = r.f64();
        cloud.points[i].y = r.f64();
        cloud.points[i].z = r.f64();
    }
    r.finish();
    return cloud;
}

// --- radar scans ---

std::vector<std::uint8_t> encode_radar_scan(const RadarPolarScan& scan) {
    ByteWriter w;
    w.magic("RADR");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(scan.n_azimuth));
    w.u32(static_cast<std::uint32_t>(scan.n_range));
    w.f64(scan.range_resolution);
    for (int a = 0; a < scan.n_azimuth; ++a)
        for (int k = 0; k < scan.n_range; ++k)
            w.f32(scan.intensities(a, k));
    return w.take();
}

RadarPolarScan decode_radar_scan(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    r.expect_magic("RADR");
    r.expect_version(1);
    const std::uint32_t n_az = r.u32();
    const std::uint32_t n_rg = r.u32();
    const double res = r.f64();
    if (n_az == 0 || n_rg == 0)
        throw IoError(IoErrorKind::shape_mismatch, "radar scan with zero-sized axis");
    if (n_az > bytes.size() || n_rg > bytes.size())
        throw IoError(IoErrorKind::truncated, "radar scan shape exceeds file size");
    r.require_exact_payload(std::uint64_t(n_az) * n_rg, 4);
    RadarPolarScan scan;
    scan.n_azimuth = static_cast<int>(n_az);
    scan.n_range = static_cast<int>(n_rg);
    scan.range_resolution = res;
    scan.intensities.resize(n_az, n_rg);
    for (std::uint32_t a = 0; a < n_az; ++a)
        for (std::uint32_t k = 0; k < n_rg; ++k)
            scan.intensities(a, k) = r.f32();
    r.finish();
    return scan;
}

// --- descriptors ---

std::vector<std::uint8_t> encode_descriptor(const PolarDescriptor& desc) {
    ByteWriter w;
    w.magic("SCTX");
    w.u32(1);
    w.u8(static_cast<std::uint8_t>(desc.modality));
    w.u32(static_cast<std::uint32_t>(desc.rings()));
    w.u32(static_cast<std::uint32_t>(desc.sectors()));
    for (int i = 0; i < desc.rings(); ++i)
        for (int j = 0; j < desc.sectors(); ++j)
            w.f32(desc.values(i, j));
    return w.take();
}

PolarDescriptor decode_descriptor(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    r.expect_magic("SCTX");
    r.expect_version(1);
    const std::uint8_t modality = r.u8();
    if (modality > 1)
        throw IoError(IoErrorKind::shape_mismatch,
                      "modality byte must be 0 or 1, got " + std::to_string(modality));
    const std::uint32_t rings = r.u32();
    const std::uint32_t sectors = r.u32();
    if (rings == 0 || sectors == 0)
        throw IoError(IoErrorKind::shape_mismatch, "descriptor with zero-sized axis");
    if (rings > bytes.size() || sectors > bytes.size())
        throw IoError(IoErrorKind::truncated, "descriptor shape exceeds file size");
    r.require_exact_payload(std::uint64_t(rings) * sectors, 4);
    PolarDescriptor desc;
    desc.modality = static_cast<Modality>(modality);
    desc.values.resize(rings, sectors);
    for (std::uint32_t i = 0; i < rings; ++i)
        for (std::uint32_t j = 0; j < sectors; ++j)
            desc.values(i, j) = r.f32();
    r.finish();
    return desc;
}

// --- signatures ---

std::vector<std::uint8_t> encode_signature(const Eigen::MatrixXf& sig) {
    ByteWriter w;
    w.magic("SIGF");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(sig.rows()));
    w.u32(static_cast<std::uint32_t>(sig.cols()));
    for (Eigen::Index i = 0; i < sig.rows(); ++i)
        for (Eigen::Index j = 0; j < sig.cols(); ++j)
            w.f32(sig(i, j));
    return w.take();
}

Eigen::MatrixXf decode_signature(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    r.expect_magic("SIGF");
    r.expect_version(1);
    const std::uint32_t h = r.u32();
    const std::uint32_t w = r.u32();
    if (h == 0 || w == 0)
        throw IoError(IoErrorKind::shape_mismatch, "signature with zero-sized axis");
    if (h > bytes.size() || w > bytes.size())
        throw IoError(IoErrorKind::truncated, "signature shape exceeds file size");
    r.require_exact_payload(std::uint64_t(h) * w, 4);
    Eigen::MatrixXf sig(h, w);
    for (std::uint32_t i = 0; i < h; ++i)
        for (std::uint32_t j = 0; j < w; ++j)
            sig(i, j) = r.f32();
    r.finish();
    return sig;
}

// --- file wrappers ---

void write_point_cloud(const std::filesystem::path& path, const PointCloud3D& cloud) {
    atomic_write_file(path, encode_point_cloud(cloud));
}
PointCloud3D read_point_cloud(const std::filesystem::path& path) {
    return decode_point_cloud(read_file_bytes(path));
}

void write_radar_scan(const std::filesystem::path& path, const RadarPolarScan& scan) {
    atomic_write_file(path, encode_radar_scan(scan));
}
RadarPolarScan read_radar_scan(const std::filesystem::path& path) {
    return decode_radar_scan(read_file_bytes(path));
}

void write_descriptor(const std::filesystem::path& path, const PolarDescriptor& desc) {
    atomic_write_file(path, encode_descriptor(desc));
}
PolarDescriptor read_descriptor(const std::filesystem::path& path) {
    return decode_descriptor(read_file_bytes(path));
}

void write_signature(const std::filesystem::path& path, const Eigen::MatrixXf& sig) {
    atomic_write_file(path, encode_signature(sig));
}
Eigen::MatrixXf read_signature(const std::filesystem::path& path) {
    return decode_signature(read_file_bytes(path));
}

// --- pose files ---

Trajectory parse_pose_text(const std::string& text, const std::string& session_id) {
    Trajectory traj;
    traj.session_id = session_id;
    std::istringstream lines(text);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        const std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        Pose2D pose;
        std::string extra;
        if (!(fields >> pose.t >> pose.x >> pose.y >> pose.yaw) || (fields >> extra))
            throw IoError(IoErrorKind::malformed_text,
                          "pose line " + std::to_string(line_no) +
                              ": expected 't x y yaw'");
        pose.yaw = wrap_angle(pose.yaw);
        if (!traj.poses.empty() && pose.t <= traj.poses.back().t)
            throw IoError(IoErrorKind::malformed_text,
                          "pose line " + std::to_string(line_no) +
                              ": timestamps must be strictly increasing");
        traj.poses.push_back(pose);
    }
    return traj;
}

Trajectory read_pose_file(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    return parse_pose_text(std::string(bytes.begin(), bytes.end()),
                           path.parent_path().filename().string());
}

std::string format_pose_file(const Trajectory& traj) {
    std::string out = "# t x y yaw\n";
    for (const Pose2D& p : traj.poses) {
        out += format_double(p.t);
        out += ' ';
        out += format_double(p.x);
        out += ' ';
        out += format_double(p.y);
        out += ' ';
        out += format_double(p.yaw);
        out += '\n';
    }
    return out;
}

void write_pose_file(const std::filesystem::path& path, const Trajectory& traj) {
    const std::string text = format_pose_file(traj);
    atomic_write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

// --- key-value files ---

static std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::istringstream lines(text);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw IoError(IoErrorKind::malformed_text,
                          "line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw IoError(IoErrorKind::malformed_text,
                          "line " + std::to_string(line_no) + ": empty key");
        kv.emplace_back(key, value);
    }
    return kv;
}

KeyValues read_key_value_file(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    return parse_key_values(std::string(bytes.begin(), bytes.end()));
}

void write_key_value_file(const std::filesystem::path& path, const KeyValues& kv) {
    std::string text;
    for (const auto& [key, value] : kv) {
        text += key;
        text += " = ";
        text += value;
        text += '\n';
    }
    atomic_write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::string text;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) text += ',';
        text += header[i];
    }
    text += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) text += ',';
            text += row[i];
        }
        text += '\n';
    }
    atomic_write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace placerec
