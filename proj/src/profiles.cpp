#include <fstream>
#include <set>

#include "feederopt/csv_util.hpp"
#include "feederopt/errors.hpp"
#include "feederopt/grid_model.hpp"

namespace feederopt::grid {

ProfileSet load_profiles(const std::filesystem::path& path, std::string_view hour) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open profiles file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty profiles file");
  const auto header = csv::split(line);
  if (header != std::vector<std::string>{"timestamp", "element_id", "p_kw", "q_kvar"}) {
    throw ParseError(path.string() + ": header must be timestamp,element_id,p_kw,q_kvar");
  }

  ProfileSet out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 4) throw ParseError(where + ": expected 4 columns");
    if (fields[0] != hour) continue;
    PowerSample sample{csv::parse_double(fields[2], where), csv::parse_double(fields[3], where)};
    if (!out.emplace(fields[1], sample).second) {
      throw ParseError(where + ": element \"" + fields[1] + "\" repeated for hour " + std::string(hour));
    }
  }
  if (out.empty()) throw MissingHourError("hour " + std::string(hour) + " not present in " + path.string());
  return out;
}

void check_profiles(const ProfileSet& profiles, const NetworkModel& model, std::string_view hour) {
  std::set<std::string, std::less<>> known;
  for (const Load& l : model.loads()) {
    known.insert(l.id);
    auto it = profiles.find(l.id);
    if (it == profiles.end()) {
      throw MissingHourError("load \"" + l.id + "\" has no profile for hour " + std::string(hour));
    }
    if (it->second.p_kw < 0.0) throw ValidationError("load \"" + l.id + "\" has negative P");
  }
  for (const Generator& g : model.generators()) {
    known.insert(g.id);
    if (!profiles.contains(g.id)) {
      throw MissingHourError("generator \"" + g.id + "\" has no profile for hour " + std::string(hour));
    }
  }
  for (const auto& [id, sample] : profiles) {
    if (!known.contains(id)) throw UnknownElementError("profile row for unknown element \"" + id + "\"");
  }
}

ProfileSet load_profiles(const std::filesystem::path& path, std::string_view hour,
                         const NetworkModel& model) {
  ProfileSet out = load_profiles(path, hour);
  check_profiles(out, model, hour);
  return out;
}

double total_load(const NetworkModel& model, const ProfileSet& profiles) {
  double sum = 0.0;
  for (const Load& l : model.loads()) {
    auto it = profiles.find(l.id);
    if (it == profiles.end()) throw MissingHourError("load \"" + l.id + "\" has no profile");
    sum += it->second.p_kw;
  }
  return sum;
}

}  // namespace feederopt::grid
