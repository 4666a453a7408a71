#include "tbss/program.hpp"

#include <cctype>
#include <sstream>

namespace tbss {

Instruction Instruction::compute(std::size_t target, RationalFunction fn) {
    Instruction i;
    i.kind = Kind::Compute;
    i.target = target;
    i.fn = std::move(fn);
    return i;
}

Instruction Instruction::branch(std::size_t left, std::size_t right, std::size_t if_le, std::size_t if_gt) {
    Instruction i;
    i.kind = Kind::Branch;
    i.left = left;
    i.right = right;
    i.if_le = if_le;
    i.if_gt = if_gt;
    return i;
}

Instruction Instruction::halt() { return Instruction{}; }

bool operator==(const Instruction& a, const Instruction& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case Instruction::Kind::Compute: return a.target == b.target && a.fn == b.fn;
    case Instruction::Kind::Branch:
        return a.left == b.left && a.right == b.right && a.if_le == b.if_le && a.if_gt == b.if_gt;
    case Instruction::Kind::Halt: return true;
    }
    return false;
}

void Program::validate() const {
    if (register_count < 1) throw ParseError(0, "register count must be at least 1");
    if (instructions.empty()) throw ParseError(0, "program must have at least one instruction");
    for (std::size_t i = 0; i < instructions.size(); ++i) {
        const Instruction& ins = instructions[i];
        auto check_reg = [&](std::size_t r) {
            if (r < 1 || r > register_count)
                throw ParseError(i, "register R" + std::to_string(r) + " out of range");
        };
        auto check_target = [&](std::size_t t) {
            if (t > instructions.size())
                throw ParseError(i, "jump target " + std::to_string(t) + " out of range");
        };
        switch (ins.kind) {
        case Instruction::Kind::Compute:
            check_reg(ins.target);
            if (ins.fn.max_var_index() > register_count)
                throw ParseError(i, "expression uses register R" + std::to_string(ins.fn.max_var_index()) +
                                        " out of range");
            break;
        case Instruction::Kind::Branch:
            check_reg(ins.left);
            check_reg(ins.right);
            check_target(ins.if_le);
            check_target(ins.if_gt);
            break;
        case Instruction::Kind::Halt: break;
        }
    }
}

namespace {

struct ExprParser {
    std::string_view s;
    std::size_t pos = 0;
    std::size_t line;

    [[noreturn]] void fail(const std::string& why) { throw ParseError(line, why); }

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }

    RationalFunction parse_expr() {
        RationalFunction acc = parse_term();
        while (true) {
            if (eat('+')) acc = acc + parse_term();
            else if (eat('-')) acc = acc - parse_term();
            else return acc;
        }
    }

    RationalFunction parse_term() {
        RationalFunction acc = parse_factor();
        while (true) {
            if (eat('*')) acc = acc * parse_factor();
            else if (eat('/')) acc = acc / parse_factor();
            else return acc;
        }
    }

    RationalFunction parse_factor() {
        if (eat('-')) return -parse_factor();
        if (eat('(')) {
            RationalFunction e = parse_expr();
            if (!eat(')')) fail("missing ')'");
            return e;
        }
        char c = peek();
        if (c == 'R') {
            ++pos;
            return RationalFunction::variable(parse_number_raw());
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos;
            while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) ++pos;
            return RationalFunction::constant(Rational::parse(s.substr(start, pos - start)));
        }
        fail("unexpected character in expression");
    }

    std::size_t parse_number_raw() {
        skip_ws();
        std::size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (start == pos) fail("expected number");
        return static_cast<std::size_t>(std::stoull(std::string(s.substr(start, pos - start))));
    }

    void expect_end() {
        skip_ws();
        if (pos != s.size()) fail("trailing characters: '" + std::string(s.substr(pos)) + "'");
    }
};

std::string_view strip(std::string_view v) {
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    return v;
}

} // namespace

Program parse_program(std::string_view text) {
    Program p;
    bool have_header = false;
    std::vector<std::pair<std::size_t, std::string>> lines; // (declared index, body)
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        std::string_view raw = text.substr(start, end == std::string_view::npos ? text.size() - start : end - start);
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        raw = strip(raw);
        if (raw.empty()) continue;
        if (!have_header) {
            if (!raw.starts_with("registers")) throw ParseError(lineno, "expected 'registers <n>' header");
            std::string_view n = strip(raw.substr(9));
            ExprParser np{n, 0, lineno};
            p.register_count = np.parse_number_raw();
            np.expect_end();
            have_header = true;
            continue;
        }
        auto colon = raw.find(':');
        if (colon == std::string_view::npos) throw ParseError(lineno, "expected '<index>: <instruction>'");
        ExprParser ip{strip(raw.substr(0, colon)), 0, lineno};
        std::size_t idx = ip.parse_number_raw();
        ip.expect_end();
        if (idx != lines.size()) throw ParseError(lineno, "instruction index " + std::to_string(idx) + " out of order");
        lines.emplace_back(lineno, std::string(strip(raw.substr(colon + 1))));
    }
    if (!have_header) throw ParseError(0, "missing 'registers <n>' header");

    for (auto& [ln, body] : lines) {
        std::string_view b = body;
        if (b == "halt") {
            p.instructions.push_back(Instruction::halt());
            continue;
        }
        if (b.starts_with("goto")) {
            ExprParser gp{b.substr(4), 0, ln};
            std::size_t t = gp.parse_number_raw();
            gp.expect_end();
            p.instructions.push_back(Instruction::branch(1, 1, t, t));
            continue;
        }
        if (b.starts_with("if")) {
            ExprParser bp{b, 2, ln};
            if (bp.peek() != 'R') bp.fail("expected register after 'if'");
            ++bp.pos;
            std::size_t left = bp.parse_number_raw();
            if (!bp.eat('<') || !bp.eat('=')) bp.fail("expected '<='");
            if (bp.peek() != 'R') bp.fail("expected register after '<='");
            ++bp.pos;
            std::size_t right = bp.parse_number_raw();
            bp.skip_ws();
            if (!b.substr(bp.pos).starts_with("goto")) bp.fail("expected 'goto'");
            bp.pos += 4;
            std::size_t if_le = bp.parse_number_raw();
            bp.skip_ws();
            if (!b.substr(bp.pos).starts_with("else")) bp.fail("expected 'else'");
            bp.pos += 4;
            bp.skip_ws();
            if (!b.substr(bp.pos).starts_with("goto")) bp.fail("expected 'goto' after 'else'");
            bp.pos += 4;
            std::size_t if_gt = bp.parse_number_raw();
            bp.expect_end();
            p.instructions.push_back(Instruction::branch(left, right, if_le, if_gt));
            continue;
        }
        if (b.starts_with("R")) {
            ExprParser cp{b, 1, ln};
            std::size_t target = cp.parse_number_raw();
            if (!cp.eat(':') || !cp.eat('=')) cp.fail("expected ':='");
            RationalFunction fn = cp.parse_expr();
            cp.expect_end();
            p.instructions.push_back(Instruction::compute(target, std::move(fn)));
            continue;
        }
        throw ParseError(ln, "unrecognized instruction '" + std::string(b) + "'");
    }
    p.validate();
    return p;
}

std::string print_program(const Program& p) {
    std::ostringstream out;
    out << "registers " << p.register_count << "\n";
    for (std::size_t i = 0; i < p.instructions.size(); ++i) {
        if (auto it = p.line_comments.find(i); it != p.line_comments.end()) out << "# " << it->second << "\n";
        const Instruction& ins = p.instructions[i];
        out << i << ": ";
        switch (ins.kind) {
        case Instruction::Kind::Compute: out << "R" << ins.target << " := " << ins.fn.str(); break;
        case Instruction::Kind::Branch:
            if (ins.left == ins.right && ins.if_le == ins.if_gt) {
                out << "goto " << ins.if_le;
            } else {
                out << "if R" << ins.left << " <= R" << ins.right << " goto " << ins.if_le << " else goto "
                    << ins.if_gt;
            }
            break;
        case Instruction::Kind::Halt: out << "halt"; break;
        }
        out << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Goedel numbering: Elias-gamma style self-delimiting bit code, embedded into
// a rational through the odd-bit sequence convention.

namespace {

struct BitWriter {
    std::vector<std::uint8_t> bits;

    void put(int b) { bits.push_back(static_cast<std::uint8_t>(b)); }
    void put_nat(const BigInt& n) {
        // Elias gamma of n+1: (len-1) zeros, then the binary digits.
        BigInt v = n + 1;
        std::vector<std::uint8_t> digits;
        for (BigInt x = v; x > 0; x >>= 1) digits.push_back(static_cast<std::uint8_t>(x & 1));
        for (std::size_t i = 1; i < digits.size(); ++i) put(0);
        for (std::size_t i = digits.size(); i-- > 0;) put(digits[i]);
    }
    void put_nat(std::size_t n) { put_nat(BigInt(static_cast<unsigned long long>(n))); }
    void put_int(const BigInt& z) {
        put(z < 0 ? 1 : 0);
        put_nat(z < 0 ? BigInt(-z) : z);
    }
};

struct BitReader {
    const EventuallyPeriodicBits& bits;
    std::size_t pos = 0;
    std::size_t limit; // canonical prefix length; bits beyond are 0

    int get() {
        if (pos > limit + (1u << 20)) throw DecodeError("runaway code");
        return bits.bit(pos++);
    }
    BigInt get_nat() {
        std::size_t zeros = 0;
        while (get() == 0) {
            if (++zeros > 4096) throw DecodeError("bad length prefix");
        }
        BigInt v = 1;
        for (std::size_t i = 0; i < zeros; ++i) v = (v << 1) + get();
        return v - 1;
    }
    std::size_t get_size() {
        BigInt n = get_nat();
        if (n > 1000000) throw DecodeError("implausible size field");
        return static_cast<std::size_t>(static_cast<unsigned long long>(n));
    }
    BigInt get_int() {
        int neg = get();
        BigInt n = get_nat();
        return neg ? -n : n;
    }
};

void write_poly(BitWriter& w, const Polynomial& poly) {
    w.put_nat(poly.terms().size());
    for (const auto& [mono, coeff] : poly.terms()) {
        std::size_t nvars = 0;
        for (std::size_t i = 0; i < mono.size(); ++i)
            if (mono[i]) ++nvars;
        w.put_nat(nvars);
        for (std::size_t i = 0; i < mono.size(); ++i)
            if (mono[i]) {
                w.put_nat(i + 1);
                w.put_nat(static_cast<std::size_t>(mono[i]));
            }
        w.put_int(coeff.num());
        w.put_nat(coeff.den() - 1);
    }
}

Polynomial read_poly(BitReader& r) {
    Polynomial acc;
    std::size_t nterms = r.get_size();
    for (std::size_t t = 0; t < nterms; ++t) {
        std::size_t nvars = r.get_size();
        Polynomial mono = Polynomial::constant(1);
        for (std::size_t v = 0; v < nvars; ++v) {
            std::size_t var = r.get_size();
            std::size_t exp = r.get_size();
            if (var == 0) throw DecodeError("variable index 0");
            Polynomial x = Polynomial::variable(var);
            for (std::size_t e = 0; e < exp; ++e) mono = mono * x;
        }
        BigInt num = r.get_int();
        BigInt den = r.get_nat() + 1;
        acc = acc + mono.scaled(Rational(num, den));
    }
    return acc;
}

} // namespace

Rational encode_program(const Program& p) {
    BitWriter w;
    w.put_nat(p.register_count);
    w.put_nat(p.instructions.size());
    for (const Instruction& ins : p.instructions) {
        switch (ins.kind) {
        case Instruction::Kind::Compute:
            w.put(0);
            w.put_nat(ins.target);
            write_poly(w, ins.fn.num());
            write_poly(w, ins.fn.den());
            break;
        case Instruction::Kind::Branch:
            w.put(1);
            w.put(0);
            w.put_nat(ins.left);
            w.put_nat(ins.right);
            w.put_nat(ins.if_le);
            w.put_nat(ins.if_gt);
            break;
        case Instruction::Kind::Halt:
            w.put(1);
            w.put(1);
            break;
        }
    }
    return seq_to_real(EventuallyPeriodicBits::finite(std::move(w.bits)));
}

Program decode_program(const Rational& code) {
    EventuallyPeriodicBits t = [&] {
        try {
            return real_to_seq(code);
        } catch (const NotASequenceCode& e) {
            throw DecodeError(e.what());
        }
    }();
    if (!t.finite_support()) throw DecodeError("code has infinite support");
    std::size_t limit = t.prefix().size();
    BitReader r{t, 0, limit};
    Program p;
    try {
        p.register_count = r.get_size();
        std::size_t n = r.get_size();
        if (n == 0) throw DecodeError("empty instruction list");
        for (std::size_t i = 0; i < n; ++i) {
            if (r.get() == 0) {
                std::size_t target = r.get_size();
                Polynomial num = read_poly(r);
                Polynomial den = read_poly(r);
                // A zero denominator is the degenerate always-crashing quotient.
                p.instructions.push_back(Instruction::compute(target, RationalFunction(std::move(num), std::move(den))));
            } else if (r.get() == 0) {
                std::size_t left = r.get_size();
                std::size_t right = r.get_size();
                std::size_t if_le = r.get_size();
                std::size_t if_gt = r.get_size();
                p.instructions.push_back(Instruction::branch(left, right, if_le, if_gt));
            } else {
                p.instructions.push_back(Instruction::halt());
            }
        }
        for (std::size_t i = r.pos; i < limit; ++i)
            if (t.bit(i)) throw DecodeError("trailing bits after program");
    } catch (const ParseError& e) {
        throw DecodeError(e.what());
    }
    try {
        p.validate();
    } catch (const ParseError& e) {
        throw DecodeError(e.what());
    }
    return p;
}

} // namespace tbss
