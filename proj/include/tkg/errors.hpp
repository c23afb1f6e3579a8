#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tkg {

enum class Errc {
    malformed_timestamp,
    out_of_range,
    underflow,
    no_candidate,
    empty_input,
    stale_chunk,
    stale_index,
    dimension_mismatch,
    unsupported_format,
    corrupt_stream,
    client_failure,
    summarizer_failure,
    insufficient_evidence,
    bad_config,
    bad_record,
};

const char* errc_name(Errc code);

// Engine-wide error. `at` carries a byte offset (parsers) or a line
// number (stream importers) when the failure has a position.
class Error : public std::runtime_error {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    Error(Errc code, std::string message, std::size_t at = npos)
        : std::runtime_error(std::move(message)), code_(code), at_(at) {}

    Errc code() const noexcept { return code_; }
    std::size_t at() const noexcept { return at_; }

private:
    Errc code_;
    std::size_t at_;
};

} // namespace tkg
