#include "lte/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace lte::text {

namespace {

// Decode one code point starting at offset i; advances i. Invalid sequences yield U+FFFD.
UChar32 next_code_point(std::string_view s, std::size_t& i) {
    auto offset = static_cast<int32_t>(i);
    const auto length = static_cast<int32_t>(s.size());
    UChar32 c = 0;
    U8_NEXT(reinterpret_cast<const uint8_t*>(s.data()), offset, length, c);
    i = static_cast<std::size_t>(offset);
    return c < 0 ? 0xFFFD : c;
}

void append_utf8(std::string& out, UChar32 c) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf, n, U8_MAX_LENGTH, c, error);
    if (error) {
        // unreachable for valid scalar values; surrogates are mapped to U+FFFD
        append_utf8(out, 0xFFFD);
        return;
    }
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) != 0; }

bool is_punct(UChar32 c) { return u_ispunct(c) != 0; }

} // namespace

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < s.size()) {
        const UChar32 c = next_code_point(s, i);
        if (is_space(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            append_utf8(current, c);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) append_utf8(out, u_tolower(next_code_point(s, i)));
    return out;
}

std::vector<std::string> code_points(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        std::string cp;
        append_utf8(cp, next_code_point(s, i));
        out.push_back(std::move(cp));
    }
    return out;
}

std::string normalize_for_match(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");

    icu::UnicodeString u = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    u = nfc->normalize(u, status);
    u.foldCase(U_FOLD_CASE_DEFAULT);
    u = nfc->normalize(u, status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");

    std::string utf8;
    u.toUTF8String(utf8);

    // Collapse whitespace, then trim whitespace/punctuation from both ends.
    std::vector<UChar32> cps;
    bool pending_space = false;
    std::size_t i = 0;
    while (i < utf8.size()) {
        const UChar32 c = next_code_point(utf8, i);
        if (is_space(c)) {
            pending_space = !cps.empty();
            continue;
        }
        if (pending_space) cps.push_back(U' ');
        pending_space = false;
        cps.push_back(c);
    }
    std::size_t begin = 0;
    std::size_t end = cps.size();
    while (begin < end && (is_punct(cps[begin]) || is_space(cps[begin]))) ++begin;
    while (end > begin && (is_punct(cps[end - 1]) || is_space(cps[end - 1]))) --end;

    std::string out;
    for (std::size_t k = begin; k < end; ++k) append_utf8(out, cps[k]);
    return out;
}

std::string flatten_newlines(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_break = false;
    for (char c : s) {
        if (c == '\n' || c == '\r') {
            if (!in_break) out.push_back(' ');
            in_break = true;
        } else {
            out.push_back(c);
            in_break = false;
        }
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

} // namespace lte::text
