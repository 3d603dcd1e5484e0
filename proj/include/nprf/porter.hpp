#pragma once

#include <string>
#include <string_view>

namespace nprf {

// Porter (1980) suffix stripper, matching the reference implementation
// including its two documented departures (bli -> ble in step 2, logi -> log)
// and the rule that words of length <= 2 are returned unchanged. Input is
// expected to be lowercase; bytes outside [a-z] are treated as consonants.
std::string porter_stem(std::string_view word);

}  // namespace nprf
