#pragma once

#include "lmbox/lmb_filter.hpp"
#include "lmbox/simulation.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace lmbox {

/// Round-trip-exact decimal formatting for CSV output.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// RFC-4180 style quoting: only fields containing commas, quotes, or line
/// breaks are wrapped, with embedded quotes doubled.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace detail {

inline nlohmann::ordered_json sensor_to_json(const SensorModel& s) {
  return nlohmann::ordered_json{{"id", s.id},
                                {"position", {s.position.x(), s.position.y()}},
                                {"p_detect", s.p_detect},
                                {"clutter_rate", s.clutter_rate},
                                {"region", s.region},
                                {"feature_mask", s.feature_mask},
                                {"reports_ref_point", s.reports_ref_point}};
}

inline SensorModel sensor_from_json(const nlohmann::json& j) {
  SensorModel s;
  s.id = j.at("id").get<int>();
  s.position = Vec2(j.at("position").at(0).get<double>(), j.at("position").at(1).get<double>());
  s.p_detect = j.at("p_detect").get<double>();
  s.clutter_rate = j.at("clutter_rate").get<double>();
  const auto& region = j.at("region");
  for (int i = 0; i < 4; ++i) s.region[i] = region.at(i).get<double>();
  s.feature_mask = static_cast<FeatureMask>(j.value("feature_mask", int(kPositionMask)));
  s.reports_ref_point = j.value("reports_ref_point", false);
  return s;
}

}  // namespace detail

/// Line-delimited measurement log. The first record describes the sensors;
/// every scan (even an empty one) gets a record so replay repeats the exact
/// update sequence, and each measurement follows its scan record.
inline void write_measurement_log(std::ostream& os, const std::vector<SimFrame>& frames) {
  nlohmann::ordered_json header{{"type", "header"}, {"version", 1}};
  nlohmann::ordered_json sensors = nlohmann::ordered_json::array();
  if (!frames.empty()) {
    for (const auto& scan : frames.front().scans) {
      sensors.push_back(detail::sensor_to_json(scan.sensor));
    }
  }
  header["sensors"] = sensors;
  os << header.dump() << '\n';

  for (const auto& frame : frames) {
    for (size_t s = 0; s < frame.scans.size(); ++s) {
      const Scan& scan = frame.scans[s];
      os << nlohmann::ordered_json{{"type", "scan"},
                                   {"frame", frame.frame},
                                   {"time", frame.time},
                                   {"sensor", scan.sensor.id},
                                   {"count", scan.measurements.size()}}
                .dump()
         << '\n';
      for (const auto& z : scan.measurements) {
        const int d = z.dim();
        std::vector<double> mean(z.mean.data(), z.mean.data() + d);
        std::vector<double> cov;
        cov.reserve(static_cast<size_t>(d) * d);
        for (int r = 0; r < d; ++r) {
          for (int c = 0; c < d; ++c) cov.push_back(z.cov(r, c));
        }
        nlohmann::ordered_json rec{{"type", "measurement"},
                                   {"frame", frame.frame},
                                   {"time", z.timestamp},
                                   {"sensor", z.sensor_id},
                                   {"mask", z.feature_mask},
                                   {"z", mean},
                                   {"cov", cov}};
        rec["ref_point"] = z.ref_point ? nlohmann::json(to_string(*z.ref_point))
                                       : nlohmann::json(nullptr);
        os << rec.dump() << '\n';
      }
    }
  }
}

inline void write_measurement_log(const std::string& path, const std::vector<SimFrame>& frames) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_measurement_log(os, frames);
}

/// Parses a measurement log, validating record order. Errors carry the
/// 1-based line number.
inline std::vector<SimFrame> read_measurement_log(std::istream& is,
                                                  const std::string& name = "log") {
  auto fail = [&name](int line, const std::string& what) {
    throw std::runtime_error(name + ":" + std::to_string(line) + ": " + what);
  };

  std::vector<SimFrame> frames;
  std::vector<SensorModel> sensors;
  bool have_header = false;
  int pending = 0;    // measurements still expected for the open scan
  Scan* open_scan = nullptr;
  std::string text;
  int line_no = 0;

  while (std::getline(is, text)) {
    ++line_no;
    if (text.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      fail(line_no, std::string("invalid JSON: ") + e.what());
    }
    const std::string type = j.value("type", "");
    try {
      if (type == "header") {
        if (have_header) fail(line_no, "duplicate header");
        for (const auto& sj : j.at("sensors")) sensors.push_back(detail::sensor_from_json(sj));
        have_header = true;
      } else if (type == "scan") {
        if (!have_header) fail(line_no, "scan before header");
        if (pending != 0) fail(line_no, "previous scan is missing measurements");
        const int frame = j.at("frame").get<int>();
        const double time = j.at("time").get<double>();
        const int sensor_id = j.at("sensor").get<int>();
        if (!frames.empty() && frame < frames.back().frame) {
          fail(line_no, "frame index went backwards");
        }
        if (!frames.empty() && time < frames.back().time - 1e-12) {
          fail(line_no, "timestamp went backwards");
        }
        if (frames.empty() || frames.back().frame != frame) {
          SimFrame f;
          f.frame = frame;
          f.time = time;
          frames.push_back(std::move(f));
        }
        const SensorModel* model = nullptr;
        for (const auto& s : sensors) {
          if (s.id == sensor_id) model = &s;
        }
        if (!model) fail(line_no, "unknown sensor id " + std::to_string(sensor_id));
        Scan scan;
        scan.sensor = *model;
        frames.back().scans.push_back(std::move(scan));
        open_scan = &frames.back().scans.back();
        pending = j.at("count").get<int>();
        if (pending < 0) fail(line_no, "negative measurement count");
      } else if (type == "measurement") {
        if (!open_scan || pending <= 0) fail(line_no, "measurement without an open scan");
        Measurement z;
        z.feature_mask = static_cast<FeatureMask>(j.value("mask", int(kPositionMask)));
        z.sensor_id = j.at("sensor").get<int>();
        z.timestamp = j.at("time").get<double>();
        const auto& mean = j.at("z");
        const int d = static_cast<int>(mean.size());
        z.mean = VecX(d);
        for (int i = 0; i < d; ++i) z.mean[i] = mean.at(i).get<double>();
        const auto& cov = j.at("cov");
        if (static_cast<int>(cov.size()) != d * d) fail(line_no, "cov size mismatch");
        z.cov = MatX(d, d);
        for (int r = 0; r < d; ++r) {
          for (int c = 0; c < d; ++c) z.cov(r, c) = cov.at(r * d + c).get<double>();
        }
        try {
          if (!j.at("ref_point").is_null()) {
            z.ref_point = ref_point_from_string(j.at("ref_point").get<std::string>());
          }
          z.validate();
        } catch (const std::invalid_argument& e) {
          fail(line_no, e.what());
        }
        open_scan->measurements.push_back(std::move(z));
        --pending;
      } else {
        fail(line_no, "unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      fail(line_no, std::string("bad record: ") + e.what());
    }
  }
  if (pending != 0) fail(line_no, "log ends inside a scan");
  return frames;
}

inline std::vector<SimFrame> read_measurement_log(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_measurement_log(is, path);
}

inline constexpr const char* kTruthCsvHeader = "frame,time,id,x,y,phi,phi_dot,v,a,w,l";

inline void write_truth_csv(std::ostream& os, const std::vector<GroundTruthFrame>& truth) {
  os << kTruthCsvHeader << '\n';
  for (const auto& frame : truth) {
    for (const auto& obj : frame.objects) {
      os << frame.frame << ',' << format_double(frame.time) << ',' << obj.id;
      for (int i = 0; i < sv::Dim; ++i) os << ',' << format_double(obj.state[i]);
      os << '\n';
    }
  }
}

inline void write_truth_csv(const std::string& path, const std::vector<GroundTruthFrame>& truth) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_truth_csv(os, truth);
}

inline std::vector<GroundTruthFrame> read_truth_csv(std::istream& is,
                                                    const std::string& name = "truth") {
  auto fail = [&name](int line, const std::string& what) {
    throw std::runtime_error(name + ":" + std::to_string(line) + ": " + what);
  };
  std::vector<GroundTruthFrame> out;
  std::string text;
  int line_no = 0;
  while (std::getline(is, text)) {
    ++line_no;
    if (text.empty()) continue;
    if (line_no == 1) {
      if (text != kTruthCsvHeader) fail(1, "unexpected header");
      continue;
    }
    std::istringstream ss(text);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 11) fail(line_no, "expected 11 fields");
    try {
      const int frame = std::stoi(fields[0]);
      const double time = std::stod(fields[1]);
      GroundTruthObject obj;
      obj.id = std::stoi(fields[2]);
      for (int i = 0; i < sv::Dim; ++i) obj.state[i] = std::stod(fields[3 + i]);
      if (out.empty() || out.back().frame != frame) {
        if (!out.empty() && frame < out.back().frame) fail(line_no, "frame went backwards");
        GroundTruthFrame f;
        f.frame = frame;
        f.time = time;
        out.push_back(std::move(f));
      }
      out.back().objects.push_back(std::move(obj));
    } catch (const std::exception&) {
      fail(line_no, "malformed numeric field");
    }
  }
  return out;
}

inline std::vector<GroundTruthFrame> read_truth_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_truth_csv(is, path);
}

struct ExtractionRow {
  int frame = 0;
  double time = 0.0;
  TrackLabel label;
  double r = 0.0;
  Vec8 state = Vec8::Zero();
};

inline constexpr const char* kExtractionCsvHeader =
    "frame,time,label,r,x,y,phi,phi_dot,v,a,w,l";

inline void write_extraction_csv(std::ostream& os, const std::vector<ExtractionRow>& rows) {
  os << kExtractionCsvHeader << '\n';
  for (const auto& row : rows) {
    os << row.frame << ',' << format_double(row.time) << ',' << csv_field(to_string(row.label))
       << ',' << format_double(row.r);
    for (int i = 0; i < sv::Dim; ++i) os << ',' << format_double(row.state[i]);
    os << '\n';
  }
}

inline std::vector<ExtractionRow> read_extraction_csv(std::istream& is,
                                                      const std::string& name = "tracks") {
  auto fail = [&name](int line, const std::string& what) {
    throw std::runtime_error(name + ":" + std::to_string(line) + ": " + what);
  };
  std::vector<ExtractionRow> out;
  std::string text;
  int line_no = 0;
  while (std::getline(is, text)) {
    ++line_no;
    if (text.empty()) continue;
    if (line_no == 1) {
      if (text != kExtractionCsvHeader) fail(1, "unexpected header");
      continue;
    }
    std::istringstream ss(text);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12) fail(line_no, "expected 12 fields");
    try {
      ExtractionRow row;
      row.frame = std::stoi(fields[0]);
      row.time = std::stod(fields[1]);
      const std::string& label = fields[2];
      const auto sep = label.find('_');
      if (sep == std::string::npos) fail(line_no, "label must look like <step>_<index>");
      row.label.birth_step = std::stoi(label.substr(0, sep));
      row.label.birth_index = std::stoi(label.substr(sep + 1));
      row.r = std::stod(fields[3]);
      for (int i = 0; i < sv::Dim; ++i) row.state[i] = std::stod(fields[4 + i]);
      out.push_back(row);
    } catch (const std::exception&) {
      fail(line_no, "malformed field");
    }
  }
  return out;
}

inline std::vector<ExtractionRow> read_extraction_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_extraction_csv(is, path);
}

}  // namespace lmbox
