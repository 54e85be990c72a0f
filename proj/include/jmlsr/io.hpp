#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "jmlsr/estimate.hpp"
#include "jmlsr/gbs.hpp"
#include "jmlsr/jmls.hpp"
#include "jmlsr/repr.hpp"
#include "jmlsr/timeseries.hpp"

namespace jmlsr::io {

using Json = nlohmann::ordered_json;

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

Json matrix_to_json(const Matrix& m);
/// Row-major nested arrays. Shape is checked against rows/cols when they are >= 0.
Matrix matrix_from_json(const Json& j, Index rows = -1, Index cols = -1);

enum class ModelKind { representation, gbs, gjmls, weak_realization, covariance_table };

/// From the "type" field, or inferred from the keys present.
ModelKind detect_kind(const Json& j);
const char* to_string(ModelKind kind);

Json to_json(const Representation& rep);
Json to_json(const GbsModel& model);
Json to_json(const GjmlsModel& model);
Json to_json(const WeakRealization& model);
Json to_json(const CovarianceTable& table);
Json to_json(const RealizeDiagnostics& diag);

Representation representation_from_json(const Json& j);
GbsModel gbs_from_json(const Json& j);
GjmlsModel gjmls_from_json(const Json& j);
WeakRealization weak_realization_from_json(const Json& j);
CovarianceTable covariance_table_from_json(const Json& j);

/// Parses text; syntax errors raise ParseError with line and column.
Json parse_json(const std::string& text);
Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);
std::string dump(const Json& j);

void write_csv(std::ostream& out, const TimeSeries& ts);
TimeSeries read_csv(std::istream& in);
void write_csv_file(const std::string& path, const TimeSeries& ts);
TimeSeries read_csv_file(const std::string& path);

}  // namespace jmlsr::io
