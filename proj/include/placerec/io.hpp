#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "placerec/geometry.hpp"

namespace placerec {

/// Domain-level failure (degenerate data, contract violations at runtime).
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

enum class IoErrorKind {
    bad_magic,
    bad_version,
    truncated,
    shape_mismatch,
    trailing_data,
    malformed_text,
    io_failure,
};

struct IoError : Error {
    IoErrorKind kind;
    IoError(IoErrorKind k, const std::string& msg) : Error(msg), kind(k) {}
};

const char* to_string(IoErrorKind kind);

enum class Modality : std::uint8_t { lidar = 0, radar = 1 };

const char* to_string(Modality m);

/// Native polar radar image: n_azimuth x n_range intensities in [0,1].
struct RadarPolarScan {
    int n_azimuth = 0;
    int n_range = 0;
    double range_resolution = 0.0;
    Eigen::MatrixXf intensities;  // row a = azimuth bin, col k = range bin
};

/// Ring x sector ScanContext matrix; binary for lidar, [0,1] for radar.
struct PolarDescriptor {
    Modality modality = Modality::lidar;
    Eigen::MatrixXf values;  // rings x sectors

    int rings() const { return static_cast<int>(values.rows()); }
    int sectors() const { return static_cast<int>(values.cols()); }
};

// --- raw file helpers ---

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Writes to "<path>.tmp" then renames, so readers never see partial files.
void atomic_write_file(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& bytes);

/// Zero-padded per-pose artifact path, e.g. dir/lidar/000042.bin.
std::filesystem::path indexed_file(const std::filesystem::path& dir,
                                   std::size_t index);

// --- binary formats (little-endian, versioned, reject trailing bytes) ---

std::vector<std::uint8_t> encode_point_cloud(const PointCloud3D& cloud);
PointCloud3D decode_point_cloud(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_radar_scan(const RadarPolarScan& scan);
RadarPolarScan decode_radar_scan(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_descriptor(const PolarDescriptor& desc);
PolarDescriptor decode_descriptor(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_signature(const Eigen::MatrixXf& sig);
Eigen::MatrixXf decode_signature(const std::vector<std::uint8_t>& bytes);

void write_point_cloud(const std::filesystem::path& path, const PointCloud3D& cloud);
PointCloud3D read_point_cloud(const std::filesystem::path& path);

void write_radar_scan(const std::filesystem::path& path, const RadarPolarScan& scan);
RadarPolarScan read_radar_scan(const std::filesystem::path& path);

void write_descriptor(const std::filesystem::path& path, const PolarDescriptor& desc);
PolarDescriptor read_descriptor(const std::filesystem::path& path);

void write_signature(const std::filesystem::path& path, const Eigen::MatrixXf& sig);
Eigen::MatrixXf read_signature(const std::filesystem::path& path);

// --- text formats ---

/// Lines "t x y yaw"; '#' comments and blank lines ignored; yaw wrapped
/// to (-pi, pi]; timestamps must be strictly increasing.
Trajectory parse_pose_text(const std::string& text, const std::string& session_id);
Trajectory read_pose_file(const std::filesystem::path& path);
std::string format_pose_file(const Trajectory& traj);
void write_pose_file(const std::filesystem::path& path, const Trajectory& traj);

/// "key = value" lines with '#' comments; order preserved, duplicate keys
/// keep the last value.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_value_file(const std::filesystem::path& path);
void write_key_value_file(const std::filesystem::path& path, const KeyValues& kv);

/// Decimal form that parses back to the bit-identical double.
std::string format_double(double v);

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace placerec
