#include "loadpatch/codec.hpp"

#include "loadpatch/errors.hpp"

namespace loadpatch::codec {

namespace {

int digit_of(char c, std::string_view word, int position) {
    switch (c) {
    case 'L': return 0;
    case 'M': return 1;
    case 'H': return 2;
    default:
        throw Error(ErrKind::codec, "invalid character '" + std::string(1, c) + "' at position " +
                                        std::to_string(position) + " in word '" +
                                        std::string(word) + "'");
    }
}

} // namespace

std::string encode(QuantValue q) {
    if (!q.has_value()) {
        return std::string(kMissingWord);
    }
    if (*q < 0 || *q > kQuantMax) {
        throw Error(ErrKind::range,
                    "quantized value " + std::to_string(*q) + " outside [0, 200]");
    }
    std::string word(kWordLen, 'L');
    int v = *q;
    for (int i = kWordLen - 1; i >= 0; --i) {
        word[static_cast<std::size_t>(i)] = "LMH"[v % 3];
        v /= 3;
    }
    return word;
}

Decoded decode(std::string_view word) {
    if (word.size() != static_cast<std::size_t>(kWordLen)) {
        throw Error(ErrKind::codec, "word '" + std::string(word) + "' is not " +
                                        std::to_string(kWordLen) + " characters");
    }
    if (word == kMissingWord) {
        return Decoded{std::nullopt, false};
    }
    int v = 0;
    for (int i = 0; i < kWordLen; ++i) {
        v = v * 3 + digit_of(word[static_cast<std::size_t>(i)], word, i);
    }
    return Decoded{v, v > kQuantMax};
}

std::string encode_combined(QuantValue load_q, int temp_q) {
    return encode(load_q) + encode(temp_q);
}

std::pair<Decoded, Decoded> decode_combined(std::string_view word) {
    if (word.size() != 2 * static_cast<std::size_t>(kWordLen)) {
        throw Error(ErrKind::codec,
                    "combined word '" + std::string(word) + "' is not 10 characters");
    }
    Decoded load = decode(word.substr(0, kWordLen));
    Decoded temp = decode(word.substr(kWordLen));
    if (!temp.value.has_value()) {
        throw Error(ErrKind::codec, "temperature half of '" + std::string(word) +
                                        "' is the missing sentinel");
    }
    return {load, temp};
}

std::string encode_series(std::span<const QuantValue> values) {
    if (values.size() != static_cast<std::size_t>(kSeriesLen)) {
        throw Error(ErrKind::shape, "series has " + std::to_string(values.size()) +
                                        " values, expected 96");
    }
    std::string out;
    out.reserve(values.size() * (kWordLen + 1));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += encode(values[i]);
    }
    return out;
}

std::string encode_combined_series(std::span<const QuantValue> load,
                                   std::span<const int> temperature) {
    if (load.size() != static_cast<std::size_t>(kSeriesLen) || load.size() != temperature.size()) {
        throw Error(ErrKind::shape, "combined series needs 96 load and 96 temperature values");
    }
    std::string out;
    out.reserve(load.size() * (2 * kWordLen + 1));
    for (std::size_t i = 0; i < load.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += encode_combined(load[i], temperature[i]);
    }
    return out;
}

std::vector<Decoded> decode_series(std::string_view text) {
    std::vector<Decoded> out;
    std::size_t i = 0;
    std::size_t token_index = 0;
    while (i < text.size()) {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' ||
                                   text[i] == '\r')) {
            ++i;
        }
        if (i >= text.size()) {
            break;
        }
        std::size_t start = i;
        while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\n' &&
               text[i] != '\r') {
            ++i;
        }
        try {
            out.push_back(decode(text.substr(start, i - start)));
        } catch (const Error& e) {
            throw Error(ErrKind::codec,
                        "token " + std::to_string(token_index) + ": " + e.what());
        }
        ++token_index;
    }
    return out;
}

} // namespace loadpatch::codec
