#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace splitrender {

/// Reliable, ordered, full-duplex byte stream (a TCP socket or an in-memory
/// pipe). One reader and one writer may use it concurrently.
class ByteStream {
public:
    virtual ~ByteStream() = default;

    /// Blocks until at least one byte is available. Returns 0 on orderly
    /// end of stream; throws ConnectionError on failure.
    virtual std::size_t read_some(std::span<std::uint8_t> out) = 0;

    /// Writes every byte or throws ConnectionError.
    virtual void write_all(std::span<const std::uint8_t> data) = 0;

    /// Half-closes the write side; the peer reads end of stream.
    virtual void shutdown_write() = 0;
};

}  // namespace splitrender
