#include "nps/asmfe/parser.hpp"

#include <cctype>
#include <sstream>

namespace nps::asmfe {

ParseError::ParseError(int line_, int column_, const std::string& what_)
    : std::runtime_error("line " + std::to_string(line_) + ":" + std::to_string(column_) +
                         ": " + what_),
      line(line_),
      column(column_) {}

namespace {

// Expected operand shapes per mnemonic. R = register, I = immediate,
// M = memory, L = label. A slot lists its admissible kinds.
struct Arity {
    int count;
    const char* slot0;
    const char* slot1;
};

Arity arity_of(Mnemonic m) {
    switch (m) {
        case Mnemonic::Mov:
            return {2, "RM", "RIM"};
        case Mnemonic::Movsxd:
            return {2, "R", "RM"};
        case Mnemonic::Lea:
            return {2, "R", "M"};
        case Mnemonic::Add:
        case Mnemonic::Sub:
        case Mnemonic::Imul:
        case Mnemonic::And:
        case Mnemonic::Or:
        case Mnemonic::Xor:
            // Register destinations only: keeps each instruction to at most
            // one dynamic memory reference (its single memory operand).
            return {2, "R", "RIM"};
        case Mnemonic::Cmp:
        case Mnemonic::Test:
            return {2, "RM", "RIM"};
        case Mnemonic::Inc:
        case Mnemonic::Dec:
            return {1, "R", ""};
        case Mnemonic::Jmp:
        case Mnemonic::Je:
        case Mnemonic::Jne:
        case Mnemonic::Jl:
        case Mnemonic::Jge:
            return {1, "L", ""};
        case Mnemonic::Nop:
        case Mnemonic::Halt:
            return {0, "", ""};
    }
    return {0, "", ""};
}

char kind_char(Operand::Kind k) {
    switch (k) {
        case Operand::Kind::Register:
            return 'R';
        case Operand::Kind::Immediate:
            return 'I';
        case Operand::Kind::Memory:
            return 'M';
        case Operand::Kind::Label:
            return 'L';
    }
    return '?';
}

class LineParser {
  public:
    LineParser(const std::string& text, int line_no) : text_(text), line_(line_no) {}

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool at_end() {
        skip_ws();
        return pos_ >= text_.size();
    }

    char peek() { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::string ident() {
        skip_ws();
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' ||
                text_[pos_] == '.'))
            ++pos_;
        if (pos_ == start) fail("expected identifier");
        return text_.substr(start, pos_ - start);
    }

    int64_t integer() {
        skip_ws();
        size_t start = pos_;
        bool neg = consume('-');
        skip_ws();
        std::string digits;
        int base = 10;
        if (peek() == '0' && pos_ + 1 < text_.size() &&
            (text_[pos_ + 1] == 'x' || text_[pos_ + 1] == 'X')) {
            pos_ += 2;
            base = 16;
        }
        while (pos_ < text_.size() &&
               std::isxdigit(static_cast<unsigned char>(text_[pos_])) &&
               (base == 16 || std::isdigit(static_cast<unsigned char>(text_[pos_]))))
            digits += text_[pos_++];
        if (digits.empty()) {
            pos_ = start;
            fail("expected integer");
        }
        uint64_t v = 0;
        for (char c : digits) {
            int d = std::isdigit(static_cast<unsigned char>(c))
                        ? c - '0'
                        : 10 + (std::tolower(static_cast<unsigned char>(c)) - 'a');
            v = v * static_cast<uint64_t>(base) + static_cast<uint64_t>(d);
        }
        int64_t sv = static_cast<int64_t>(v);
        return neg ? -sv : sv;
    }

    [[noreturn]] void fail(const std::string& msg) {
        throw ParseError(line_, static_cast<int>(pos_) + 1, msg);
    }

    size_t pos() const { return pos_; }
    void set_pos(size_t p) { pos_ = p; }

  private:
    const std::string& text_;
    int line_;
    size_t pos_ = 0;
};

MemExpr parse_mem_expr(LineParser& lp) {
    MemExpr e;
    bool any = false;
    bool negate = false;
    for (;;) {
        lp.skip_ws();
        char c = lp.peek();
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t save = lp.pos();
            std::string name = lp.ident();
            auto reg = reg_from_name(name);
            if (!reg) {
                lp.set_pos(save);
                lp.fail("unknown register '" + name + "' in memory expression");
            }
            if (negate) lp.fail("registers may not be negated in a memory expression");
            int scale = 1;
            if (lp.consume('*')) {
                int64_t s = lp.integer();
                if (s != 1 && s != 2 && s != 4 && s != 8)
                    lp.fail("scale must be 1, 2, 4, or 8");
                scale = static_cast<int>(s);
            }
            if (scale != 1 || (e.base && !e.index)) {
                if (e.index) lp.fail("duplicate index register");
                e.index = *reg;
                e.scale = scale;
            } else if (!e.base) {
                e.base = *reg;
            } else if (!e.index) {
                e.index = *reg;
            } else {
                lp.fail("too many registers in memory expression");
            }
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
            int64_t v = lp.integer();
            // 'imm*reg' form
            if (lp.consume('*')) {
                if (v != 1 && v != 2 && v != 4 && v != 8)
                    lp.fail("scale must be 1, 2, 4, or 8");
                std::string name = lp.ident();
                auto reg = reg_from_name(name);
                if (!reg) lp.fail("unknown register '" + name + "'");
                if (e.index) lp.fail("duplicate index register");
                if (negate) lp.fail("scaled index may not be negated");
                e.index = *reg;
                e.scale = static_cast<int>(v);
            } else {
                e.displacement += negate ? -v : v;
                e.has_displacement = true;
            }
        } else {
            lp.fail("expected register or displacement in memory expression");
        }
        any = true;
        lp.skip_ws();
        if (lp.peek() == ']') break;
        if (lp.consume('+')) {
            negate = false;
        } else if (lp.consume('-')) {
            negate = true;
        } else {
            lp.fail("expected '+', '-', or ']'");
        }
    }
    if (!any || (!e.base && !e.index && !e.has_displacement))
        lp.fail("empty memory expression");
    return e;
}

Operand parse_operand(LineParser& lp) {
    lp.skip_ws();
    char c = lp.peek();
    if (c == '[') {
        lp.expect('[');
        MemExpr e = parse_mem_expr(lp);
        lp.skip_ws();
        lp.expect(']');
        return Operand::make_mem(e);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
        return Operand::make_imm(lp.integer());
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
        std::string name = lp.ident();
        if (auto reg = reg_from_name(name)) return Operand::make_reg(*reg);
        return Operand::make_label(name);
    }
    lp.fail("expected operand");
}

}  // namespace

Program parse_program(const std::string& source) {
    Program prog;
    std::istringstream in(source);
    std::string raw;
    int line_no = 0;
    std::vector<std::pair<std::string, int>> pending_labels;

    while (std::getline(in, raw)) {
        ++line_no;
        if (auto sc = raw.find(';'); sc != std::string::npos) raw = raw.substr(0, sc);

        LineParser lp(raw, line_no);
        if (lp.at_end()) continue;

        // Optional "label:" prefix (possibly a label-only line).
        {
            size_t save = lp.pos();
            char c = lp.peek();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
                std::string word = lp.ident();
                if (lp.consume(':')) {
                    if (prog.labels.count(word))
                        throw ParseError(line_no, 1, "duplicate label '" + word + "'");
                    prog.labels[word] = static_cast<int>(prog.instructions.size());
                    if (lp.at_end()) continue;
                } else {
                    lp.set_pos(save);
                }
            }
        }

        size_t mn_pos = lp.pos();
        std::string word = lp.ident();
        auto mnemonic = mnemonic_from_name(word);
        if (!mnemonic)
            throw ParseError(line_no, static_cast<int>(mn_pos) + 1,
                             "unknown mnemonic '" + word + "'");

        Instruction inst;
        inst.index = static_cast<int>(prog.instructions.size());
        inst.mnemonic = *mnemonic;
        inst.source_line = line_no;

        Arity ar = arity_of(*mnemonic);
        for (int i = 0; i < ar.count; ++i) {
            if (i > 0 && !lp.consume(','))
                lp.fail("expected ',' between operands of " + word);
            if (lp.at_end())
                lp.fail("missing operand " + std::to_string(i + 1) + " of " + word);
            inst.operands.push_back(parse_operand(lp));
        }
        if (!lp.at_end()) lp.fail("trailing tokens after " + word);

        const char* slots[2] = {ar.slot0, ar.slot1};
        int mem_count = 0;
        for (int i = 0; i < ar.count; ++i) {
            char k = kind_char(inst.operands[i].kind);
            if (std::string_view(slots[i]).find(k) == std::string_view::npos)
                throw ParseError(line_no, 1,
                                 std::string("operand ") + std::to_string(i + 1) + " of " +
                                     word + " may not be of this kind");
            if (k == 'M') ++mem_count;
        }
        if (mem_count > 1)
            throw ParseError(line_no, 1, "at most one memory operand per instruction");

        prog.instructions.push_back(std::move(inst));
    }

    // Resolve labels.
    for (auto& inst : prog.instructions) {
        for (auto& op : inst.operands) {
            if (op.kind != Operand::Kind::Label) continue;
            auto it = prog.labels.find(op.label);
            if (it == prog.labels.end())
                throw ParseError(inst.source_line, 1, "unresolved label '" + op.label + "'");
            if (it->second >= static_cast<int>(prog.instructions.size()))
                throw ParseError(inst.source_line, 1,
                                 "label '" + op.label + "' does not name an instruction");
            op.target = it->second;
        }
    }
    return prog;
}

}  // namespace nps::asmfe
