#include "hydrocast/basin.hpp"

#include <algorithm>
#include <fstream>
#include "json.hpp"
#include <sstream>

#include "hydrocast/csv.hpp"
#include "hydrocast/error.hpp"

namespace hydrocast {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- records

std::optional<double> AttributeVector::get(const std::string& name) const {
  auto it = std::lower_bound(names.begin(), names.end(), name);
  if (it == names.end() || *it != name) return std::nullopt;
  return values[static_cast<std::size_t>(it - names.begin())];
}

void AttributeVector::set(const std::string& name, double value) {
  auto it = std::lower_bound(names.begin(), names.end(), name);
  const auto pos = it - names.begin();
  if (it != names.end() && *it == name) {
    values[static_cast<std::size_t>(pos)] = value;
    return;
  }
  names.insert(it, name);
  values.insert(values.begin() + pos, value);
}

std::optional<std::size_t> BasinRecord::index_of(Date d) const {
  if (num_days == 0 || d < start || d > end()) return std::nullopt;
  return static_cast<std::size_t>(d - start);
}

const ForcingSource* BasinRecord::source(const std::string& name) const {
  for (const auto& s : forcings) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const std::vector<double>* BasinRecord::forcing(const std::string& qualified) const {
  const auto dot = qualified.find('.');
  if (dot == std::string::npos) return nullptr;
  const ForcingSource* src = source(qualified.substr(0, dot));
  if (src == nullptr) return nullptr;
  const std::string var = qualified.substr(dot + 1);
  for (std::size_t i = 0; i < src->variables.size(); ++i) {
    if (src->variables[i] == var) return &src->columns[i];
  }
  return nullptr;
}

std::size_t BasinRecord::missing_discharge_days() const {
  return static_cast<std::size_t>(std::count_if(discharge.begin(), discharge.end(), is_missing));
}

std::vector<std::string> DatasetSchema::qualified_variables(const std::string& source) const {
  std::vector<std::string> out;
  auto it = sources.find(source);
  if (it == sources.end()) return out;
  for (const auto& v : it->second) out.push_back(source + "." + v);
  return out;
}

// ---------------------------------------------------------------- loading

namespace {

struct DatedTable {
  std::vector<std::string> columns;        // value columns (date excluded)
  std::vector<Date> dates;
  std::vector<std::vector<double>> values;  // values[column][row]
};

DatedTable read_dated_csv(const fs::path& path) {
  const csv::Table table = csv::read(path);
  const std::string file = path.string();
  if (table.header.empty() || table.header[0] != "date") {
    throw ParseError(file, 1, "first column must be 'date'");
  }
  DatedTable out;
  out.columns.assign(table.header.begin() + 1, table.header.end());
  out.values.resize(out.columns.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::size_t line = table.line_numbers[r];
    Date d;
    try {
      d = Date::parse(table.rows[r][0]);
    } catch (const ValidationError& e) {
      throw ParseError(file, line, e.what());
    }
    if (!out.dates.empty()) {
      if (d == out.dates.back()) throw ParseError(file, line, "duplicate date " + d.iso());
      if (d < out.dates.back()) throw ParseError(file, line, "non-monotone dates at " + d.iso());
    }
    out.dates.push_back(d);
    for (std::size_t c = 0; c < out.columns.size(); ++c) {
      out.values[c].push_back(csv::parse_number(table.rows[r][c + 1], file, line));
    }
  }
  return out;
}

std::vector<double> reindex(const DatedTable& t, std::size_t column, Date start, std::size_t n) {
  std::vector<double> out(n, csv::kMissing);
  for (std::size_t r = 0; r < t.dates.size(); ++r) {
    out[static_cast<std::size_t>(t.dates[r] - start)] = t.values[column][r];
  }
  return out;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 1, e.what());
  }
}

template <typename T>
T required(const json& j, const char* key, const fs::path& path) {
  if (!j.contains(key)) throw ParseError(path.string(), 1, std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 1, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

BasinRecord load_basin(const fs::path& dir, const DatasetSchema* schema) {
  if (!fs::is_directory(dir)) throw DataError("not a basin directory: " + dir.string());
  BasinRecord rec;

  const fs::path meta_path = dir / "meta.json";
  const json meta = read_json(meta_path);
  rec.gauge_id = required<std::string>(meta, "gauge_id", meta_path);
  rec.drainage_area_reported = required<double>(meta, "drainage_area_reported", meta_path);
  rec.drainage_area_polygon = required<double>(meta, "drainage_area_polygon", meta_path);
  rec.continent = required<std::string>(meta, "continent", meta_path);
  rec.climate_zone = required<std::string>(meta, "climate_zone", meta_path);
  rec.terminal_basin_id = required<std::string>(meta, "terminal_basin_id", meta_path);
  if (!(rec.drainage_area_reported > 0.0) || !(rec.drainage_area_polygon > 0.0)) {
    throw ParseError(meta_path.string(), 1, "drainage areas must be strictly positive");
  }

  std::vector<std::pair<std::string, DatedTable>> sources;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string fname = entry.path().filename().string();
    if (fname.rfind("forcings_", 0) == 0 && entry.path().extension() == ".csv") {
      std::string name = fname.substr(9, fname.size() - 9 - 4);
      sources.emplace_back(std::move(name), read_dated_csv(entry.path()));
    }
  }
  std::sort(sources.begin(), sources.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  const fs::path q_path = dir / "discharge.csv";
  const DatedTable discharge = read_dated_csv(q_path);
  if (discharge.columns.size() != 1 || discharge.columns[0] != "q_mmday") {
    throw ParseError(q_path.string(), 1, "expected header 'date,q_mmday'");
  }
  {
    const csv::Table raw = csv::read(q_path);  // for line numbers of offending rows
    for (std::size_t r = 0; r < discharge.dates.size(); ++r) {
      if (discharge.values[0][r] < 0.0) {
        throw ParseError(q_path.string(), raw.line_numbers[r], "negative discharge");
      }
    }
  }

  bool have_any = !discharge.dates.empty();
  Date lo = have_any ? discharge.dates.front() : Date();
  Date hi = have_any ? discharge.dates.back() : Date();
  for (const auto& [name, t] : sources) {
    if (t.dates.empty()) continue;
    lo = have_any ? std::min(lo, t.dates.front()) : t.dates.front();
    hi = have_any ? std::max(hi, t.dates.back()) : t.dates.back();
    have_any = true;
  }
  if (!have_any) throw DataError(dir.string() + ": basin has no dated rows");
  rec.start = lo;
  rec.num_days = static_cast<std::size_t>(hi - lo) + 1;
  rec.discharge = reindex(discharge, 0, lo, rec.num_days);

  for (const auto& [name, t] : sources) {
    ForcingSource src;
    src.name = name;
    src.variables = t.columns;
    for (std::size_t c = 0; c < t.columns.size(); ++c) src.columns.push_back(reindex(t, c, lo, rec.num_days));
    rec.forcings.push_back(std::move(src));
  }

  const fs::path attr_path = dir / "attributes.json";
  if (fs::exists(attr_path)) {
    const json attrs = read_json(attr_path);
    if (!attrs.is_object()) throw ParseError(attr_path.string(), 1, "attributes must be a JSON object");
    for (const auto& [key, value] : attrs.items()) {
      if (value.is_null()) {
        rec.attributes.set(key, csv::kMissing);
      } else if (value.is_number()) {
        rec.attributes.set(key, value.get<double>());
      } else {
        throw ParseError(attr_path.string(), 1, "attribute '" + key + "' is not numeric");
      }
    }
  }

  if (schema != nullptr) conform_to_schema(rec, *schema);
  return rec;
}

DatasetSchema infer_schema(std::span<const BasinRecord> records) {
  DatasetSchema schema;
  std::vector<std::string> attrs;
  for (const auto& r : records) {
    for (const auto& s : r.forcings) {
      auto& vars = schema.sources[s.name];
      for (const auto& v : s.variables) {
        if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
      }
    }
    attrs.insert(attrs.end(), r.attributes.names.begin(), r.attributes.names.end());
  }
  std::sort(attrs.begin(), attrs.end());
  attrs.erase(std::unique(attrs.begin(), attrs.end()), attrs.end());
  schema.attributes = std::move(attrs);
  return schema;
}

void conform_to_schema(BasinRecord& record, const DatasetSchema& schema) {
  for (const auto& [name, vars] : schema.sources) {
    auto it = std::find_if(record.forcings.begin(), record.forcings.end(),
                           [&](const ForcingSource& s) { return s.name == name; });
    if (it == record.forcings.end()) {
      ForcingSource src;
      src.name = name;
      record.forcings.push_back(std::move(src));
      it = record.forcings.end() - 1;
    }
    for (const auto& v : vars) {
      if (std::find(it->variables.begin(), it->variables.end(), v) == it->variables.end()) {
        it->variables.push_back(v);
        it->columns.emplace_back(record.num_days, csv::kMissing);
      }
    }
  }
  std::sort(record.forcings.begin(), record.forcings.end(),
            [](const ForcingSource& a, const ForcingSource& b) { return a.name < b.name; });
  for (const auto& a : schema.attributes) {
    if (!record.attributes.get(a)) record.attributes.set(a, csv::kMissing);
  }
}

Dataset load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("data root is not a directory: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  Dataset ds;
  for (const auto& d : dirs) ds.basins.push_back(load_basin(d));
  ds.schema = infer_schema(ds.basins);
  for (auto& b : ds.basins) conform_to_schema(b, ds.schema);
  std::sort(ds.basins.begin(), ds.basins.end(),
            [](const BasinRecord& a, const BasinRecord& b) { return a.gauge_id < b.gauge_id; });
  return ds;
}

// ---------------------------------------------------------------- writing

void write_basin(const BasinRecord& record, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& src : record.forcings) {
    bool any = false;
    for (const auto& col : src.columns) any = any || std::any_of(col.begin(), col.end(), [](double v) { return !is_missing(v); });
    if (!any) continue;
    std::ostringstream out;
    out << "date";
    for (const auto& v : src.variables) out << ',' << v;
    out << '\n';
    for (std::size_t i = 0; i < record.num_days; ++i) {
      out << record.date_at(i).iso();
      for (const auto& col : src.columns) out << ',' << csv::format_number(col[i]);
      out << '\n';
    }
    csv::write_text(dir / ("forcings_" + src.name + ".csv"), out.str());
  }
  {
    std::ostringstream out;
    out << "date,q_mmday\n";
    for (std::size_t i = 0; i < record.num_days; ++i) {
      out << record.date_at(i).iso() << ',' << csv::format_number(record.discharge[i]) << '\n';
    }
    csv::write_text(dir / "discharge.csv", out.str());
  }
  json attrs = json::object();
  for (std::size_t i = 0; i < record.attributes.names.size(); ++i) {
    const double v = record.attributes.values[i];
    attrs[record.attributes.names[i]] = is_missing(v) ? json(nullptr) : json(v);
  }
  csv::write_text(dir / "attributes.json", attrs.dump(2) + "\n");
  json meta = {{"gauge_id", record.gauge_id},
               {"drainage_area_reported", record.drainage_area_reported},
               {"drainage_area_polygon", record.drainage_area_polygon},
               {"continent", record.continent},
               {"climate_zone", record.climate_zone},
               {"terminal_basin_id", record.terminal_basin_id}};
  csv::write_text(dir / "meta.json", meta.dump(2) + "\n");
}

// ---------------------------------------------------------------- filter

std::vector<BasinRecord> filter_gauges(std::vector<BasinRecord> records, double tolerance,
                                       std::vector<std::string>* dropped) {
  if (!(tolerance > 0.0 && tolerance < 1.0)) {
    throw ValidationError("area tolerance must lie in (0,1), got " + std::to_string(tolerance));
  }
  std::vector<BasinRecord> kept;
  kept.reserve(records.size());
  for (auto& r : records) {
    const double rel = std::abs(r.drainage_area_reported - r.drainage_area_polygon) / r.drainage_area_reported;
    if (rel <= tolerance) {
      kept.push_back(std::move(r));
    } else if (dropped != nullptr) {
      dropped->push_back(r.gauge_id);
    }
  }
  return kept;
}

}  // namespace hydrocast
