#include "manifest.hpp"

#include "evseg/errors.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

namespace evseg::cli {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json manifest_header(const Context& ctx, std::string_view command) {
  Json j;
  j["tool"] = "evseg";
  j["version"] = EVSEG_VERSION;
  j["command"] = command;
  j["argv"] = ctx.argv;
  j["started_at"] = utc_timestamp();
  return j;
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace evseg::cli
