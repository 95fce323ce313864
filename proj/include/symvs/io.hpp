#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "symvs/camera.hpp"
#include "symvs/fusion.hpp"
#include "symvs/types.hpp"

namespace symvs {

namespace fs = std::filesystem;

/// Contents of an MVSNet-style camera text file.
struct CameraFile {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  double depth_min = 0.0;
  double depth_interval = 0.0;
};

/// Throws ParseError (with line) on malformed or non-finite input.
CameraFile parse_camera(const std::string& text);
std::string format_camera(const CameraFile& cam);
CameraFile read_camera(const fs::path& path);
void write_camera(const fs::path& path, const CameraFile& cam);

/// Grayscale little-endian PFM; invalid pixels are stored as 0.
DepthMap parse_pfm(const std::string& bytes);
std::string format_pfm(const DepthMap& depth);
DepthMap read_pfm(const fs::path& path);
void write_pfm(const fs::path& path, const DepthMap& depth);

/// Binary PGM (P5) or PPM (P6) with maxval up to 65535, scaled to [0, 1].
Image parse_pnm(const std::string& bytes);
Image read_pnm(const fs::path& path);
/// Writes P5 for one channel and P6 for three, with the given maxval
/// (255 or 65535); values are clamped to [0, 1] and rounded.
std::string format_pnm(const Image& image, int maxval);
void write_pnm(const fs::path& path, const Image& image, int maxval);
/// 8-bit PGM: 255 where set.
void write_mask_pgm(const fs::path& path, const Mask& mask);

/// ASCII or binary little-endian PLY with float x y z and, when the cloud
/// has colours, uchar red green blue.
enum class PlyFormat { kAscii, kBinaryLittleEndian };
PointCloud parse_ply(const std::string& bytes);
std::string format_ply(const PointCloud& cloud, PlyFormat format);
PointCloud read_ply(const fs::path& path);
void write_ply(const fs::path& path, const PointCloud& cloud, PlyFormat format);

std::string read_file(const fs::path& path);
/// Creates parent directories as needed.
void write_file(const fs::path& path, const std::string& bytes);

/// Directory layout:
///   images/00000000.ppm, cams/00000000_cam.txt, optional gt/00000000.pfm,
///   optional run.cfg
struct Bundle {
  std::vector<CameraView> views;
  std::vector<CameraFile> cameras;
  std::vector<DepthMap> gt_depths;  // empty when the bundle has none
  fs::path run_config;              // empty when absent
};

/// Throws IoError naming the missing file.
Bundle read_bundle(const fs::path& dir);
void write_bundle(const fs::path& dir, const Bundle& bundle);

/// Eight-digit zero-padded index.
std::string view_stem(int index);

/// Depth maps named depth/00000000.pfm etc. inside dir, in index order.
std::vector<DepthMap> read_depth_dir(const fs::path& dir);
void write_depth_dir(const fs::path& dir, const std::vector<DepthMap>& depths);

}  // namespace symvs
