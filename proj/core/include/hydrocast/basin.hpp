#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hydrocast/calendar.hpp"

namespace hydrocast {

// Missing values are NaN throughout the data model.
inline bool is_missing(double v) { return std::isnan(v); }

struct AttributeVector {
  // Sorted by name; NaN marks a missing attribute.
  std::vector<std::string> names;
  std::vector<double> values;

  std::optional<double> get(const std::string& name) const;
  void set(const std::string& name, double value);
};

// All variables of one forcing source on the basin calendar.
struct ForcingSource {
  std::string name;
  std::vector<std::string> variables;
  std::vector<std::vector<double>> columns;  // columns[variable][day]
};

struct BasinRecord {
  std::string gauge_id;
  double drainage_area_reported = 0.0;  // km2
  double drainage_area_polygon = 0.0;   // km2
  std::string continent;
  std::string climate_zone;
  std::string terminal_basin_id;

  Date start;
  std::size_t num_days = 0;
  std::vector<ForcingSource> forcings;  // sorted by source name
  std::vector<double> discharge;        // mm/day, area-normalized
  AttributeVector attributes;

  Date date_at(std::size_t index) const { return start + static_cast<std::int32_t>(index); }
  Date end() const { return date_at(num_days - 1); }
  std::optional<std::size_t> index_of(Date d) const;

  const ForcingSource* source(const std::string& name) const;
  // Column for "source.variable"; nullptr when absent.
  const std::vector<double>* forcing(const std::string& qualified) const;
  std::size_t missing_discharge_days() const;
};

// Names of sources, their variables and static attributes across a dataset.
struct DatasetSchema {
  std::map<std::string, std::vector<std::string>> sources;
  std::vector<std::string> attributes;

  std::vector<std::string> qualified_variables(const std::string& source) const;
};

struct Dataset {
  DatasetSchema schema;
  std::vector<BasinRecord> basins;  // sorted by gauge id
};

// Loads `<dir>/forcings_*.csv`, `discharge.csv`, `attributes.json` and
// `meta.json`. With a schema, sources and attributes absent from the
// directory are added wholly missing.
BasinRecord load_basin(const std::filesystem::path& dir, const DatasetSchema* schema = nullptr);
void write_basin(const BasinRecord& record, const std::filesystem::path& dir);

// Every subdirectory of `root` containing a meta.json is a basin.
Dataset load_dataset(const std::filesystem::path& root);
DatasetSchema infer_schema(std::span<const BasinRecord> records);
// Adds missing sources/variables/attributes to match the schema.
void conform_to_schema(BasinRecord& record, const DatasetSchema& schema);

// Keeps records where |reported - polygon| / reported <= tolerance.
std::vector<BasinRecord> filter_gauges(std::vector<BasinRecord> records, double tolerance = 0.20,
                                       std::vector<std::string>* dropped = nullptr);

}  // namespace hydrocast
