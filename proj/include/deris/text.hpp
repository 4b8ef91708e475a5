#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace deris {

/// Lowercases ASCII letters and splits on every run of characters that are
/// not ASCII alphanumerics. Bytes >= 0x80 count as word characters so UTF-8
/// words stay intact.
std::vector<std::string> tokenize(std::string_view sentence);

}  // namespace deris
