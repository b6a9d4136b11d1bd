//
// Copyright 2026 The dpcore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Schema sidecar files and CSV ingestion.
//
// Sidecar format, one column per line, '#' starts a comment:
//
//   age      integer      18 65
//   salary   real         0 300000
//   disease  categorical  flu,measles,ebola
//
// Categorical values are comma separated and may not contain whitespace or
// commas. A CSV file must start with a header naming the schema's columns in
// order.

#ifndef DPCORE_SCHEMA_IO_H_
#define DPCORE_SCHEMA_IO_H_

#include <cstddef>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/internal/format.h"
#include "dpcore/relational.h"
#include "dpcore/status_macros.h"

namespace dpcore {

inline absl::StatusOr<std::string> ReadFileToString(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(internal::StrCat("cannot open '", path, "'"));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline absl::StatusOr<Schema> ParseSchema(std::string_view text) {
  std::vector<ColumnMeta> columns;
  int line_number = 0;
  for (std::string_view line : internal::Split(text, "\n")) {
    ++line_number;
    std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    std::vector<std::string_view> fields =
        internal::Split(line, " \t\r", true);
    if (fields.empty()) continue;
    auto bad = [&](std::string_view why) {
      return absl::InvalidArgumentError(
          internal::StrCat("schema line ", line_number, ": ", why));
    };
    if (fields.size() < 3) return bad("expected: name kind bounds-or-values");
    std::string name(fields[0]);
    std::string_view kind = fields[1];
    absl::StatusOr<ColumnMeta> column;
    if (kind == "categorical") {
      if (fields.size() != 3) return bad("categorical takes one value list");
      column = ColumnMeta::Categorical(name, internal::SplitList(fields[2], ','));
    } else if (kind == "integer") {
      if (fields.size() != 4) return bad("integer takes lower and upper");
      auto lo = internal::ParseInt64(fields[2]);
      auto hi = internal::ParseInt64(fields[3]);
      if (!lo || !hi) return bad("integer bounds must be integers");
      column = ColumnMeta::Integer(name, *lo, *hi);
    } else if (kind == "real") {
      if (fields.size() != 4) return bad("real takes lower and upper");
      auto lo = internal::ParseDouble(fields[2]);
      auto hi = internal::ParseDouble(fields[3]);
      if (!lo || !hi) return bad("real bounds must be numbers");
      column = ColumnMeta::Real(name, *lo, *hi);
    } else {
      return bad("kind must be categorical, integer or real");
    }
    if (!column.ok()) return bad(std::string(column.status().message()));
    columns.push_back(*std::move(column));
  }
  if (columns.empty()) {
    return absl::InvalidArgumentError("schema declares no columns");
  }
  return Schema::Create(std::move(columns));
}

inline std::string FormatSchema(const Schema& schema) {
  std::string out;
  for (const ColumnMeta& c : schema.columns()) {
    switch (c.kind()) {
      case ColumnKind::kCategorical:
        internal::StrAppend(&out, c.name(), " categorical ",
                        internal::StrJoin(c.categories(), ","), "\n");
        break;
      case ColumnKind::kInteger:
        internal::StrAppend(&out, c.name(), " integer ", c.int_lower(), " ",
                        c.int_upper(), "\n");
        break;
      case ColumnKind::kReal:
        internal::StrAppend(&out, c.name(), " real ",
                        internal::FormatDouble(c.lower()), " ",
                        internal::FormatDouble(c.upper()), "\n");
        break;
    }
  }
  return out;
}

namespace internal {

// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
inline absl::StatusOr<std::vector<std::string>> SplitCsvRecord(
    std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  bool field_started_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && current.empty() && !field_started_quoted) {
      quoted = true;
      field_started_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
      field_started_quoted = false;
    } else {
      current.push_back(c);
    }
  }
  if (quoted) return absl::InvalidArgumentError("unterminated quote");
  fields.push_back(std::move(current));
  return fields;
}

}  // namespace internal

// Parses CSV text against a declared schema. Errors name the line only, never
// the offending value. Out-of-domain categories and out-of-bounds numbers are
// not errors: MakeTable corrects them and notes it in the developer log.
inline absl::StatusOr<Table> ParseCsv(std::string_view text,
                                      const Schema& schema,
                                      DevLog& log = DevLog::Global()) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
    text.remove_prefix(3);
  }
  std::vector<Row> rows;
  bool header_seen = false;
  int line_number = 0;
  for (std::string_view line : internal::Split(text, "\n")) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (internal::StripWhitespace(line).empty()) continue;
    auto bad = [&](std::string_view why) {
      return absl::InvalidArgumentError(
          internal::StrCat("csv line ", line_number, ": ", why));
    };
    absl::StatusOr<std::vector<std::string>> fields =
        internal::SplitCsvRecord(line);
    if (!fields.ok()) return bad(std::string(fields.status().message()));
    if (fields->size() != schema.size()) {
      return bad(internal::StrCat("expected ", schema.size(), " fields, found ",
                              fields->size()));
    }
    if (!header_seen) {
      for (std::size_t c = 0; c < schema.size(); ++c) {
        if (internal::StripWhitespace((*fields)[c]) !=
            schema.column(c).name()) {
          return bad("header does not match schema column order");
        }
      }
      header_seen = true;
      continue;
    }
    Row row;
    row.reserve(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const ColumnMeta& column = schema.column(c);
      std::string_view field = internal::StripWhitespace((*fields)[c]);
      switch (column.kind()) {
        case ColumnKind::kCategorical: {
          std::optional<std::int64_t> code = column.CategoryCode(field);
          // -1 is out of domain and is mapped to the sentinel by MakeTable.
          row.emplace_back(code.value_or(-1));
          break;
        }
        case ColumnKind::kInteger: {
          std::optional<std::int64_t> v = internal::ParseInt64(field);
          if (!v) return bad(internal::StrCat("field ", c + 1, " is not an integer"));
          row.emplace_back(*v);
          break;
        }
        case ColumnKind::kReal: {
          std::optional<double> v = internal::ParseDouble(field);
          if (!v) return bad(internal::StrCat("field ", c + 1, " is not a number"));
          row.emplace_back(*v);
          break;
        }
      }
    }
    rows.push_back(std::move(row));
  }
  if (!header_seen) return absl::InvalidArgumentError("csv has no header row");
  return MakeTable(schema, std::move(rows), log);
}

inline absl::StatusOr<Table> LoadCsv(const std::string& csv_path,
                                     const std::string& schema_path,
                                     DevLog& log = DevLog::Global()) {
  DPCORE_ASSIGN_OR_RETURN(std::string schema_text,
                          ReadFileToString(schema_path));
  DPCORE_ASSIGN_OR_RETURN(Schema schema, ParseSchema(schema_text));
  DPCORE_ASSIGN_OR_RETURN(std::string csv_text, ReadFileToString(csv_path));
  return ParseCsv(csv_text, schema, log);
}

// Header plus one line per row. Fields containing a comma, quote or
// leading/trailing space are quoted.
inline std::string FormatCsv(const Table& table) {
  auto field = [](const std::string& text) {
    bool quote = text.find_first_of(",\"\r\n") != std::string::npos ||
                 (!text.empty() && (text.front() == ' ' || text.back() == ' '));
    if (!quote) return text;
    std::string out = "\"";
    for (char c : text) {
      if (c == '"') out.push_back('"');
      out.push_back(c);
    }
    out.push_back('"');
    return out;
  };
  const Schema& schema = table.schema();
  std::string out;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (c > 0) out.push_back(',');
    out += field(schema.column(c).name());
  }
  out.push_back('\n');
  for (const Row& row : table.rows()) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (c > 0) out.push_back(',');
      out += field(schema.column(c).FormatValue(row[c]));
    }
    out.push_back('\n');
  }
  return out;
}

inline absl::Status WriteStringToFile(const std::string& path,
                                      std::string_view contents) {
  std::FILE* file = std::fopen(path.c_str(), "wb");
  if (file == nullptr) {
    return absl::UnavailableError(
        internal::StrCat("cannot write '", path, "'"));
  }
  bool ok = std::fwrite(contents.data(), 1, contents.size(), file) ==
            contents.size();
  ok = std::fclose(file) == 0 && ok;
  if (!ok) {
    return absl::UnavailableError(
        internal::StrCat("write to '", path, "' failed"));
  }
  return absl::OkStatus();
}

}  // namespace dpcore

#endif  // DPCORE_SCHEMA_IO_H_
