#pragma once

#include "tbss/ratfun.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tbss {

struct DecodeError : std::runtime_error {
    DecodeError(const std::string& why) : std::runtime_error("bad program code: " + why) {}
};

/// One machine instruction. Register indices are 1-based; jump targets may be
/// |program| (fall-off halt).
struct Instruction {
    enum class Kind { Compute, Branch, Halt };

    Kind kind = Kind::Halt;
    // Compute
    std::size_t target = 0;
    RationalFunction fn;
    // Branch: if R[left] <= R[right] goto if_le else goto if_gt
    std::size_t left = 0, right = 0, if_le = 0, if_gt = 0;

    static Instruction compute(std::size_t target, RationalFunction fn);
    static Instruction branch(std::size_t left, std::size_t right, std::size_t if_le, std::size_t if_gt);
    static Instruction halt();

    friend bool operator==(const Instruction&, const Instruction&);
};

struct Program {
    std::size_t register_count = 1;
    std::vector<Instruction> instructions;
    /// Non-semantic annotations emitted by program transformations; ignored by
    /// equality, encoding and execution.
    std::map<std::size_t, std::string> line_comments;

    /// Throws ParseError on out-of-range register indices or jump targets.
    void validate() const;

    friend bool operator==(const Program& a, const Program& b) {
        return a.register_count == b.register_count && a.instructions == b.instructions;
    }
};

Program parse_program(std::string_view text);
std::string print_program(const Program& p);

/// Self-delimiting Gödel numbering embedded through the codec's odd-bit
/// convention: decode(encode(p)) == p.
Rational encode_program(const Program& p);
Program decode_program(const Rational& code);

} // namespace tbss
