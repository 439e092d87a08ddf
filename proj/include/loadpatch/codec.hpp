#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Fixed-width ternary word codec. Every quantized value in [0, 200] maps to
// a five-letter word over {L, M, H} (base-3 digits 0/1/2, most significant
// first); a missing value maps to the sentinel "OOOOO". Decoding accepts the
// full five-digit ternary range [0, 242] and flags values above 200 as
// out-of-model-range so the restorer can repair them.

namespace loadpatch::codec {

inline constexpr int kQuantMax = 200;
inline constexpr int kCodeMax = 242; // 3^5 - 1
inline constexpr int kWordLen = 5;
inline constexpr std::string_view kMissingWord = "OOOOO";
inline constexpr int kSeriesLen = 96;

// A quantized load value; nullopt marks a missing reading.
using QuantValue = std::optional<int>;

struct Decoded {
    QuantValue value;                // nullopt for the missing sentinel
    bool out_of_model_range = false; // decoded into (200, 242]
};

std::string encode(QuantValue q);
Decoded decode(std::string_view word);

// Ten-character joint word: load half first, temperature half last.
// Temperature is never missing.
std::string encode_combined(QuantValue load_q, int temp_q);
std::pair<Decoded, Decoded> decode_combined(std::string_view word);

// Space-separated 96-word form of a daily series.
std::string encode_series(std::span<const QuantValue> values);
std::string encode_combined_series(std::span<const QuantValue> load,
                                   std::span<const int> temperature);

// Splits on any run of whitespace; token count is preserved. Codec errors
// carry the zero-based token index.
std::vector<Decoded> decode_series(std::string_view text);

} // namespace loadpatch::codec
