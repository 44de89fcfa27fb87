#pragma once

#include <string>

#include "lmpf/network.hpp"

namespace lmpf {

/// Everything a case file can carry.
struct CaseDocument {
  GridCase grid;
  ConstraintSchedule schedule;
  ContingencyModel contingencies;
};

/// Parses and validates a JSON case document. Throws InvalidInput on schema
/// violations and TopologyError on disconnected networks.
CaseDocument load_case_document(const std::string& text);
GridCase load_case(const std::string& text);

/// Normalized JSON text (sorted keys, explicit limits, two-space indent).
/// load -> save -> load -> save is byte-stable.
std::string save_case_document(const CaseDocument& doc);

CaseDocument read_case_file(const std::string& path);
std::string read_text_file(const std::string& path);
/// Writes through a temporary file and renames, so a failed write leaves nothing behind.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace lmpf
