#include "kfvio/dataset/euroc.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "kfvio/core/error.hpp"
#include "kfvio/dataset/image_io.hpp"

namespace kfvio {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Rows of a comma separated file, comments and blank lines skipped. Each row
/// keeps its 1-based line number for error messages.
struct CsvRow {
  int line = 0;
  std::vector<std::string_view> fields;
};

class CsvFile {
 public:
  explicit CsvFile(const fs::path& file) : path_(file) {
    std::ifstream in(file);
    if (!in) fail(ErrorCode::kIo, "missing file " + file.string());
    std::string line;
    while (std::getline(in, line)) lines_.push_back(line);
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      std::string_view sv = trim(lines_[i]);
      if (sv.empty() || sv.front() == '#') continue;
      CsvRow row;
      row.line = static_cast<int>(i) + 1;
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = sv.find(',', start);
        row.fields.push_back(trim(sv.substr(start, comma == std::string_view::npos ? sv.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      rows_.push_back(std::move(row));
    }
  }

  const std::vector<CsvRow>& rows() const { return rows_; }

  [[noreturn]] void error(const CsvRow& row, const std::string& what) const {
    fail(ErrorCode::kParse, path_.string() + ":" + std::to_string(row.line) + ": " + what);
  }

  template <typename T>
  T number(const CsvRow& row, std::size_t col) const {
    if (col >= row.fields.size()) error(row, "expected at least " + std::to_string(col + 1) + " columns");
    T value{};
    const std::string_view f = row.fields[col];
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
    if (ec != std::errc() || ptr != f.data() + f.size())
      error(row, "malformed number '" + std::string(f) + "' in column " + std::to_string(col + 1));
    return value;
  }

 private:
  fs::path path_;
  std::vector<std::string> lines_;  // backing storage for the string_views
  std::vector<CsvRow> rows_;
};

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

fs::path resolve_root(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::kIo, "dataset directory not found: " + dir.string());
  if (fs::exists(dir / "mav0" / "imu0")) return dir / "mav0";
  return dir;
}

struct ImageList {
  std::vector<std::pair<std::int64_t, fs::path>> entries;
};

ImageList read_image_list(const fs::path& cam_dir) {
  CsvFile csv(cam_dir / "data.csv");
  ImageList list;
  for (const CsvRow& row : csv.rows()) {
    const auto t = csv.number<std::int64_t>(row, 0);
    if (row.fields.size() < 2 || row.fields[1].empty()) csv.error(row, "missing image filename");
    if (!list.entries.empty() && t <= list.entries.back().first)
      fail(ErrorCode::kStream, (cam_dir / "data.csv").string() + ":" + std::to_string(row.line) +
                                   ": timestamps not strictly increasing");
    list.entries.emplace_back(t, cam_dir / "data" / std::string(row.fields[1]));
  }
  return list;
}

CameraCalib read_camera_yaml(const fs::path& file, const CameraCalib& fallback) {
  if (!fs::exists(file)) return fallback;
  CameraCalib c = fallback;
  try {
    const YAML::Node root = YAML::LoadFile(file.string());
    if (auto intr = root["intrinsics"]) {
      c.fx = intr[0].as<double>();
      c.fy = intr[1].as<double>();
      c.cx = intr[2].as<double>();
      c.cy = intr[3].as<double>();
    }
    if (auto dist = root["distortion_coefficients"]) {
      c.k1 = dist[0].as<double>();
      c.k2 = dist[1].as<double>();
      c.p1 = dist[2].as<double>();
      c.p2 = dist[3].as<double>();
    }
    if (auto res = root["resolution"]) {
      c.width = res[0].as<int>();
      c.height = res[1].as<int>();
    }
    if (auto tbs = root["T_BS"]) {
      const YAML::Node data = tbs["data"];
      Mat3 R;
      Vec3 t;
      for (int r = 0; r < 3; ++r) {
        for (int col = 0; col < 3; ++col) R(r, col) = data[4 * r + col].as<double>();
        t(r) = data[4 * r + 3].as<double>();
      }
      c.body_T_cam = {orthonormalize(R), t};
    }
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::kParse, file.string() + ": " + e.what());
  }
  return c;
}

void read_imu_yaml(const fs::path& file, ImuNoise& noise) {
  if (!fs::exists(file)) return;
  try {
    const YAML::Node root = YAML::LoadFile(file.string());
    if (root["gyroscope_noise_density"]) noise.gyro_noise_density = root["gyroscope_noise_density"].as<double>();
    if (root["accelerometer_noise_density"])
      noise.accel_noise_density = root["accelerometer_noise_density"].as<double>();
    if (root["gyroscope_random_walk"]) noise.gyro_random_walk = root["gyroscope_random_walk"].as<double>();
    if (root["accelerometer_random_walk"]) noise.accel_random_walk = root["accelerometer_random_walk"].as<double>();
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::kParse, file.string() + ": " + e.what());
  }
}

void write_camera_yaml(const fs::path& file, const CameraCalib& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "sensor_type" << YAML::Value << "camera";
  out << YAML::Key << "T_BS" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "cols" << YAML::Value << 4 << YAML::Key << "rows" << YAML::Value << 4;
  out << YAML::Key << "data" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < 3; ++col) out << c.body_T_cam.rotation(r, col);
    out << c.body_T_cam.translation(r);
  }
  out << 0.0 << 0.0 << 0.0 << 1.0 << YAML::EndSeq << YAML::EndMap;
  out << YAML::Key << "resolution" << YAML::Value << YAML::Flow << YAML::BeginSeq << c.width << c.height
      << YAML::EndSeq;
  out << YAML::Key << "camera_model" << YAML::Value << "pinhole";
  out << YAML::Key << "intrinsics" << YAML::Value << YAML::Flow << YAML::BeginSeq << c.fx << c.fy << c.cx << c.cy
      << YAML::EndSeq;
  out << YAML::Key << "distortion_model" << YAML::Value << "radial-tangential";
  out << YAML::Key << "distortion_coefficients" << YAML::Value << YAML::Flow << YAML::BeginSeq << c.k1 << c.k2
      << c.p1 << c.p2 << YAML::EndSeq;
  out << YAML::EndMap;
  std::ofstream f(file);
  if (!f) fail(ErrorCode::kIo, "cannot write " + file.string());
  f << out.c_str() << "\n";
}

}  // namespace

GroundTruth::GroundTruth(std::vector<GroundTruthSample> samples) : samples_(std::move(samples)) {
  for (std::size_t i = 1; i < samples_.size(); ++i)
    if (samples_[i].timestamp_ns <= samples_[i - 1].timestamp_ns)
      fail(ErrorCode::kInvalidArgument, "ground truth timestamps must be strictly increasing");
}

GroundTruthSample GroundTruth::interpolate(std::int64_t t_ns) const {
  if (!covers(t_ns)) fail(ErrorCode::kOutOfRange, "ground truth does not cover t=" + std::to_string(t_ns));
  auto it = std::lower_bound(samples_.begin(), samples_.end(), t_ns,
                             [](const GroundTruthSample& s, std::int64_t t) { return s.timestamp_ns < t; });
  if (it->timestamp_ns == t_ns) return *it;
  const GroundTruthSample& b = *it;
  const GroundTruthSample& a = *(it - 1);
  const double alpha = static_cast<double>(t_ns - a.timestamp_ns) / static_cast<double>(b.timestamp_ns - a.timestamp_ns);
  GroundTruthSample out;
  out.timestamp_ns = t_ns;
  out.position = (1.0 - alpha) * a.position + alpha * b.position;
  out.velocity = (1.0 - alpha) * a.velocity + alpha * b.velocity;
  out.gyro_bias = (1.0 - alpha) * a.gyro_bias + alpha * b.gyro_bias;
  out.accel_bias = (1.0 - alpha) * a.accel_bias + alpha * b.accel_bias;
  out.rotation = a.rotation * so3_exp(alpha * so3_log(a.rotation.transpose() * b.rotation));
  return out;
}

StereoCalib euroc_default_calibration() {
  StereoCalib s;
  s.left.fx = 458.654;
  s.left.fy = 457.296;
  s.left.cx = 367.215;
  s.left.cy = 248.375;
  s.left.k1 = -0.28340811;
  s.left.k2 = 0.07395907;
  s.left.p1 = 0.00019359;
  s.left.p2 = 1.76187114e-05;
  Mat3 R0;
  R0 << 0.0148655429818, -0.999880929698, 0.00414029679422,  //
      0.999557249008, 0.0149672133247, 0.025715529948,       //
      -0.0257744366974, 0.00375618835797, 0.999660727178;
  s.left.body_T_cam = {orthonormalize(R0), Vec3(-0.0216401454975, -0.064676986768, 0.00981073058949)};

  s.right.fx = 457.587;
  s.right.fy = 456.134;
  s.right.cx = 379.999;
  s.right.cy = 255.238;
  s.right.k1 = -0.28368365;
  s.right.k2 = 0.07451284;
  s.right.p1 = -0.00010473;
  s.right.p2 = -3.55590700e-05;
  Mat3 R1;
  R1 << 0.0125552670891, -0.999755099723, 0.0182237714554,  //
      0.999598781151, 0.0130119051815, 0.0251588363115,     //
      -0.0253898008918, 0.0179005838253, 0.999517347078;
  s.right.body_T_cam = {orthonormalize(R1), Vec3(-0.0198435579556, 0.0453689425024, 0.00786212447038)};

  const double b = s.right_T_left().translation.norm();
  s.left.baseline = s.right.baseline = b;
  return s;
}

std::vector<ImuSample> read_imu_csv(const fs::path& file) {
  CsvFile csv(file);
  std::vector<ImuSample> out;
  out.reserve(csv.rows().size());
  for (const CsvRow& row : csv.rows()) {
    if (row.fields.size() < 7) csv.error(row, "expected 7 columns, got " + std::to_string(row.fields.size()));
    ImuSample s;
    s.timestamp_ns = csv.number<std::int64_t>(row, 0);
    for (int k = 0; k < 3; ++k) {
      s.angular_velocity(k) = csv.number<double>(row, 1 + k);
      s.linear_acceleration(k) = csv.number<double>(row, 4 + k);
    }
    if (!out.empty() && s.timestamp_ns <= out.back().timestamp_ns)
      fail(ErrorCode::kStream, file.string() + ":" + std::to_string(row.line) + ": timestamps not strictly increasing");
    out.push_back(s);
  }
  return out;
}

void write_imu_csv(const fs::path& file, const std::vector<ImuSample>& samples) {
  std::ofstream out(file);
  if (!out) fail(ErrorCode::kIo, "cannot write " + file.string());
  out << "#timestamp [ns],w_RS_S_x [rad s^-1],w_RS_S_y [rad s^-1],w_RS_S_z [rad s^-1],"
         "a_RS_S_x [m s^-2],a_RS_S_y [m s^-2],a_RS_S_z [m s^-2]\n";
  for (const ImuSample& s : samples) {
    out << s.timestamp_ns;
    for (int k = 0; k < 3; ++k) out << ',' << fmt_double(s.angular_velocity(k));
    for (int k = 0; k < 3; ++k) out << ',' << fmt_double(s.linear_acceleration(k));
    out << '\n';
  }
}

GroundTruth read_ground_truth_csv(const fs::path& file) {
  CsvFile csv(file);
  std::vector<GroundTruthSample> out;
  out.reserve(csv.rows().size());
  for (const CsvRow& row : csv.rows()) {
    if (row.fields.size() < 11) csv.error(row, "expected at least 11 columns");
    GroundTruthSample s;
    s.timestamp_ns = csv.number<std::int64_t>(row, 0);
    for (int k = 0; k < 3; ++k) s.position(k) = csv.number<double>(row, 1 + k);
    const Eigen::Quaterniond q(csv.number<double>(row, 4), csv.number<double>(row, 5), csv.number<double>(row, 6),
                               csv.number<double>(row, 7));
    s.rotation = from_quaternion(q);
    for (int k = 0; k < 3; ++k) s.velocity(k) = csv.number<double>(row, 8 + k);
    if (row.fields.size() >= 17) {
      for (int k = 0; k < 3; ++k) {
        s.gyro_bias(k) = csv.number<double>(row, 11 + k);
        s.accel_bias(k) = csv.number<double>(row, 14 + k);
      }
    }
    if (!out.empty() && s.timestamp_ns <= out.back().timestamp_ns)
      fail(ErrorCode::kStream, file.string() + ":" + std::to_string(row.line) + ": timestamps not strictly increasing");
    out.push_back(s);
  }
  return GroundTruth(std::move(out));
}

void write_ground_truth_csv(const fs::path& file, const GroundTruth& gt) {
  std::ofstream out(file);
  if (!out) fail(ErrorCode::kIo, "cannot write " + file.string());
  out << "#timestamp, p_RS_R_x [m], p_RS_R_y [m], p_RS_R_z [m], q_RS_w [], q_RS_x [], q_RS_y [], q_RS_z [], "
         "v_RS_R_x [m s^-1], v_RS_R_y [m s^-1], v_RS_R_z [m s^-1], b_w_RS_S_x [rad s^-1], b_w_RS_S_y [rad s^-1], "
         "b_w_RS_S_z [rad s^-1], b_a_RS_S_x [m s^-2], b_a_RS_S_y [m s^-2], b_a_RS_S_z [m s^-2]\n";
  for (const GroundTruthSample& s : gt.samples()) {
    const Eigen::Quaterniond q = to_quaternion(s.rotation);
    out << s.timestamp_ns;
    for (int k = 0; k < 3; ++k) out << ',' << fmt_double(s.position(k));
    out << ',' << fmt_double(q.w()) << ',' << fmt_double(q.x()) << ',' << fmt_double(q.y()) << ','
        << fmt_double(q.z());
    for (int k = 0; k < 3; ++k) out << ',' << fmt_double(s.velocity(k));
    for (int k = 0; k < 3; ++k) out << ',' << fmt_double(s.gyro_bias(k));
    for (int k = 0; k < 3; ++k) out << ',' << fmt_double(s.accel_bias(k));
    out << '\n';
  }
}

std::unique_ptr<EurocSequence> load_euroc(const fs::path& dir) {
  const fs::path root = resolve_root(dir);
  auto seq = std::make_unique<EurocSequence>();

  seq->imu_ = read_imu_csv(root / "imu0" / "data.csv");
  read_imu_yaml(root / "imu0" / "sensor.yaml", seq->noise_);

  const ImageList left = read_image_list(root / "cam0");
  const StereoCalib defaults = euroc_default_calibration();
  seq->calib_.left = read_camera_yaml(root / "cam0" / "sensor.yaml", defaults.left);

  std::map<std::int64_t, fs::path> right_by_time;
  if (fs::exists(root / "cam1" / "data.csv")) {
    for (auto& [t, p] : read_image_list(root / "cam1").entries) right_by_time.emplace(t, p);
    seq->calib_.right = read_camera_yaml(root / "cam1" / "sensor.yaml", defaults.right);
    seq->stereo_ = true;
  }
  const double baseline = seq->stereo_ ? seq->calib_.right_T_left().translation.norm() : 0.0;
  seq->calib_.left.baseline = seq->calib_.right.baseline = baseline;

  for (const auto& [t, path] : left.entries) {
    EurocSequence::FrameFiles f{t, path, {}};
    if (seq->stereo_) {
      auto it = right_by_time.find(t);
      if (it == right_by_time.end()) continue;  // unpaired stereo frame
      f.right = it->second;
    }
    seq->frames_.push_back(std::move(f));
  }

  const fs::path gt_file = root / "state_groundtruth_estimate0" / "data.csv";
  if (!fs::exists(gt_file)) fail(ErrorCode::kIo, "missing file " + gt_file.string());
  seq->ground_truth_ = read_ground_truth_csv(gt_file);
  return seq;
}

FrameEvent EurocSequence::frame(std::size_t index, bool with_right) const {
  const FrameFiles& f = frames_.at(index);
  FrameEvent ev;
  ev.timestamp_ns = f.timestamp_ns;
  ev.left = load_image(f.left);
  if (with_right && stereo_) ev.right = load_image(f.right);
  return ev;
}

void write_euroc(const fs::path& dir, const SensorSequence& seq) {
  const fs::path cam0 = dir / "cam0", cam1 = dir / "cam1", imu0 = dir / "imu0",
                 gt = dir / "state_groundtruth_estimate0";
  fs::create_directories(cam0 / "data");
  fs::create_directories(imu0);
  fs::create_directories(gt);
  if (seq.has_stereo()) fs::create_directories(cam1 / "data");

  write_imu_csv(imu0 / "data.csv", seq.imu());
  {
    YAML::Emitter out;
    const ImuNoise& n = seq.imu_noise();
    out << YAML::BeginMap << YAML::Key << "sensor_type" << YAML::Value << "imu";
    out << YAML::Key << "gyroscope_noise_density" << YAML::Value << n.gyro_noise_density;
    out << YAML::Key << "gyroscope_random_walk" << YAML::Value << n.gyro_random_walk;
    out << YAML::Key << "accelerometer_noise_density" << YAML::Value << n.accel_noise_density;
    out << YAML::Key << "accelerometer_random_walk" << YAML::Value << n.accel_random_walk;
    out << YAML::EndMap;
    std::ofstream f(imu0 / "sensor.yaml");
    f << out.c_str() << "\n";
  }
  write_ground_truth_csv(gt / "data.csv", seq.ground_truth());
  write_camera_yaml(cam0 / "sensor.yaml", seq.calibration().left);
  if (seq.has_stereo()) write_camera_yaml(cam1 / "sensor.yaml", seq.calibration().right);

  std::ofstream c0(cam0 / "data.csv"), c1;
  c0 << "#timestamp [ns],filename\n";
  if (seq.has_stereo()) {
    c1.open(cam1 / "data.csv");
    c1 << "#timestamp [ns],filename\n";
  }
  for (std::size_t i = 0; i < seq.frame_count(); ++i) {
    const FrameEvent ev = seq.frame(i, seq.has_stereo());
    const std::string name = std::to_string(ev.timestamp_ns) + ".png";
    save_png(cam0 / "data" / name, ev.left);
    c0 << ev.timestamp_ns << ',' << name << '\n';
    if (ev.right) {
      save_png(cam1 / "data" / name, *ev.right);
      c1 << ev.timestamp_ns << ',' << name << '\n';
    }
  }
}

}  // namespace kfvio
