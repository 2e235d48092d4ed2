#pragma once

#include <string>

#include "dopf/model/case.hpp"

namespace dopf::model {

inline constexpr int kCaseSchemaVersion = 1;

std::string case_to_json(const Case& c);
Case case_from_json(const std::string& text);

void save_case(const Case& c, const std::string& path);
Case load_case(const std::string& path);

}  // namespace dopf::model
