#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "s2ctl/experiments.hpp"

namespace s2ctl {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kManifestName = "manifest.json";

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string XmlEscape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &length) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-256 computation failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

std::string Sha256File(const fs::path& path) { return Sha256Hex(ReadFile(path)); }

std::string FormatDouble(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::string UtcTimestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

OutputDirectory::OutputDirectory(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
}

fs::path OutputDirectory::Write(const std::string& name, const std::string& content) {
  const fs::path path = root_ / name;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file << content;
  if (!file) throw std::runtime_error("write failed for " + path.string());
  if (std::find(written_.begin(), written_.end(), name) == written_.end())
    written_.push_back(name);
  return path;
}

void WriteManifest(const OutputDirectory& out, const ManifestInfo& info) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(out.root())) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), out.root()).generic_string();
    if (rel != kManifestName) files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  const std::set<std::string> this_run(out.written().begin(), out.written().end());

  ordered_json doc;
  doc["artifact"] = "s2ctl";
  doc["version"] = kArtifactVersion;
  doc["command"] = info.command;
  doc["exit_code"] = info.exit_code;
  doc["seed"] = info.config.seed;
  doc["started_utc"] = info.started_utc;
  doc["finished_utc"] = info.finished_utc;
  doc["wall_seconds"] = info.wall_seconds;
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : ConfigSnapshot(info.config)) config[k] = v;
  doc["config"] = std::move(config);
  ordered_json list = ordered_json::array();
  for (const std::string& rel : files) {
    const fs::path path = out.root() / rel;
    ordered_json item;
    item["path"] = rel;
    item["bytes"] = fs::file_size(path);
    item["sha256"] = Sha256File(path);
    item["this_run"] = this_run.count(rel) > 0;
    list.push_back(std::move(item));
  }
  doc["files"] = std::move(list);
  std::ofstream file(out.root() / kManifestName, std::ios::binary | std::ios::trunc);
  file << doc.dump(2) << "\n";
  if (!file) throw std::runtime_error("cannot write manifest");
}

ManifestCheck VerifyManifest(const fs::path& directory) {
  ManifestCheck check;
  ordered_json doc;
  try {
    doc = ordered_json::parse(ReadFile(directory / kManifestName));
  } catch (const std::exception& e) {
    check.problems.push_back(std::string("unreadable manifest: ") + e.what());
    return check;
  }
  std::set<std::string> listed;
  for (const auto& item : doc.at("files")) {
    const std::string rel = item.at("path").get<std::string>();
    listed.insert(rel);
    const fs::path path = directory / rel;
    if (!fs::exists(path)) {
      check.problems.push_back("missing file " + rel);
      continue;
    }
    if (Sha256File(path) != item.at("sha256").get<std::string>())
      check.problems.push_back("checksum mismatch for " + rel);
    if (fs::file_size(path) != item.at("bytes").get<std::uintmax_t>())
      check.problems.push_back("size mismatch for " + rel);
  }
  for (const auto& entry : fs::recursive_directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), directory).generic_string();
    if (rel != kManifestName && listed.count(rel) == 0)
      check.problems.push_back("unlisted file " + rel);
  }
  check.ok = check.problems.empty();
  return check;
}

// ---------------------------------------------------------------------------
// CSV

std::string ConvergenceCsv(const ConvergenceRecord& record) {
  std::ostringstream out;
  out << "delta,error,kick_residual,flagged\n";
  for (const ConvergenceRow& row : record.rows) {
    out << FormatDouble(row.delta) << "," << FormatDouble(row.error) << ","
        << FormatDouble(row.kick_residual) << "," << (row.flagged ? 1 : 0) << "\n";
  }
  return out.str();
}

std::string TransferCsv(const std::vector<TransferResult>& rows) {
  std::ostringstream out;
  out << "j,degree,delta_or_idealized,overlap,distance,residual\n";
  for (const TransferResult& r : rows) {
    out << r.j << ",";
    if (r.mode == TransferMode::kExactPhase) out << "exact,exact";
    else if (r.mode == TransferMode::kIdealized) out << r.degree << ",idealized";
    else out << r.degree << "," << FormatDouble(r.delta);
    out << "," << FormatDouble(r.overlap) << "," << FormatDouble(r.distance) << ","
        << FormatDouble(r.residual) << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// SVG

std::string RenderSvg(const PlotSpec& plot) {
  constexpr double kWidth = 640.0, kHeight = 440.0;
  constexpr double kLeft = 80.0, kRight = 160.0, kTop = 40.0, kBottom = 60.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  auto tx = [&](double v) { return plot.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return plot.log_y ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const PlotSeries& s : plot.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if ((plot.log_x && s.x[i] <= 0) || (plot.log_y && s.y[i] <= 0)) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (!(x0 <= x1)) { x0 = 0; x1 = 1; }
  if (!(y0 <= y1)) { y0 = 0; y1 = 1; }
  if (x1 - x0 < 1e-12) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 < 1e-12) { y0 -= 0.5; y1 += 0.5; }
  auto px = [&](double v) { return kLeft + (tx(v) - x0) / (x1 - x0) * plot_w; };
  auto py = [&](double v) { return kTop + plot_h - (ty(v) - y0) / (y1 - y0) * plot_h; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream svg;
  svg << std::setprecision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << XmlEscape(plot.title)
      << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Ticks at five evenly spaced positions of the transformed axis.
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0;
    const double fy = y0 + (y1 - y0) * k / 4.0;
    const double sx = kLeft + plot_w * k / 4.0;
    const double sy = kTop + plot_h - plot_h * k / 4.0;
    std::ostringstream lx, ly;
    lx << std::setprecision(3) << (plot.log_x ? std::pow(10.0, fx) : fx);
    ly << std::setprecision(3) << (plot.log_y ? std::pow(10.0, fy) : fy);
    svg << "<line x1=\"" << sx << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << sx
        << "\" y2=\"" << kTop + plot_h + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << sx << "\" y=\"" << kTop + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << lx.str() << "</text>\n";
    svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << sy << "\" x2=\"" << kLeft
        << "\" y2=\"" << sy << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << sy + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << ly.str() << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << XmlEscape(plot.x_label) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << kTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << kTop + plot_h / 2 << ")\">"
      << XmlEscape(plot.y_label) << "</text>\n";

  for (std::size_t s = 0; s < plot.series.size(); ++s) {
    const PlotSeries& series = plot.series[s];
    const char* color = kColors[s % 5];
    if (series.line) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" "
          << "points=\"";
      for (std::size_t i = 0; i < series.x.size(); ++i)
        svg << px(series.x[i]) << "," << py(series.y[i]) << " ";
      svg << "\"/>\n";
    } else {
      for (std::size_t i = 0; i < series.x.size(); ++i) {
        if ((plot.log_x && series.x[i] <= 0) || (plot.log_y && series.y[i] <= 0))
          continue;
        const bool hollow = i < series.hollow.size() && series.hollow[i];
        svg << "<circle cx=\"" << px(series.x[i]) << "\" cy=\"" << py(series.y[i])
            << "\" r=\"4\" stroke=\"" << color << "\" fill=\""
            << (hollow ? "none" : color) << "\"/>\n";
      }
    }
    const double ly = kTop + 14 + 18.0 * static_cast<double>(s);
    svg << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << ly - 9
        << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
    svg << "<text x=\"" << kWidth - kRight + 28 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << XmlEscape(series.label)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace s2ctl
