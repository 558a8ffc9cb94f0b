// SPDX-License-Identifier: Apache-2.0

#include "topocl/smiles.h"

#include <cctype>
#include <map>
#include <optional>
#include <vector>

#include "topocl/elements.h"

namespace topocl {

SmilesError::SmilesError(Kind kind, std::size_t offset, const std::string& message)
    : Error(std::string(smilesErrorKindName(kind)) + " at offset " + std::to_string(offset) + ": " + message),
      kind_(kind),
      offset_(offset) {}

std::string_view smilesErrorKindName(SmilesError::Kind kind) {
  switch (kind) {
    case SmilesError::Kind::UnsupportedToken:
      return "UnsupportedToken";
    case SmilesError::Kind::UnbalancedBranch:
      return "UnbalancedBranch";
    case SmilesError::Kind::DanglingRingClosure:
      return "DanglingRingClosure";
    case SmilesError::Kind::InvalidBond:
      return "InvalidBond";
    case SmilesError::Kind::Empty:
      return "Empty";
  }
  return "SmilesError";
}

namespace {

using Kind = SmilesError::Kind;

struct PendingBond {
  BondType    type;
  std::size_t offset;
};

struct OpenRing {
  int                        atom;
  std::optional<PendingBond> bond;
  std::size_t                offset;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  MolGraph run() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '[') {
        parseBracketAtom();
      } else if (std::isalpha(static_cast<unsigned char>(c))) {
        parseOrganicAtom();
      } else if (c == '(') {
        if (prev_ < 0) fail(Kind::UnbalancedBranch, "branch opened before any atom");
        if (pending_) fail(Kind::InvalidBond, "bond symbol before '('");
        branches_.push_back({prev_, pos_});
        ++pos_;
      } else if (c == ')') {
        if (branches_.empty()) fail(Kind::UnbalancedBranch, "unmatched ')'");
        if (pending_) fail(Kind::InvalidBond, "bond symbol before ')'");
        prev_ = branches_.back().first;
        branches_.pop_back();
        ++pos_;
      } else if (c == '-' || c == '=' || c == '#' || c == ':') {
        if (prev_ < 0) fail(Kind::InvalidBond, "bond symbol without a preceding atom");
        if (pending_) fail(Kind::InvalidBond, "two consecutive bond symbols");
        pending_ = PendingBond{bondFromChar(c), pos_};
        ++pos_;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        parseRingClosure();
      } else if (c == '.') {
        if (pending_) fail(Kind::InvalidBond, "bond symbol before '.'");
        prev_ = -1;
        ++pos_;
      } else if (c == '/' || c == '\\' || c == '@') {
        fail(Kind::UnsupportedToken, "stereo markers are not supported");
      } else if (c == '+') {
        fail(Kind::UnsupportedToken, "charge outside brackets");
      } else {
        fail(Kind::UnsupportedToken, std::string("unexpected character '") + c + "'");
      }
    }
    if (pending_) {
      throw SmilesError(Kind::InvalidBond, pending_->offset, "bond symbol at end of input");
    }
    if (!branches_.empty()) {
      throw SmilesError(Kind::UnbalancedBranch, branches_.back().second, "unclosed '('");
    }
    if (!rings_.empty()) {
      const auto& [label, ring] = *rings_.begin();
      throw SmilesError(Kind::DanglingRingClosure, ring.offset, "ring bond " + std::to_string(label) + " never closed");
    }
    if (graph_.numAtoms() == 0) {
      throw SmilesError(Kind::Empty, 0, "no atoms");
    }
    return std::move(graph_);
  }

 private:
  [[noreturn]] void fail(Kind kind, const std::string& message) const { throw SmilesError(kind, pos_, message); }

  static BondType bondFromChar(char c) {
    switch (c) {
      case '=':
        return BondType::Double;
      case '#':
        return BondType::Triple;
      case ':':
        return BondType::Aromatic;
      default:
        return BondType::Single;
    }
  }

  BondType implicitBond(int a, int b) const {
    return aromatic_[static_cast<std::size_t>(a)] && aromatic_[static_cast<std::size_t>(b)] ? BondType::Aromatic
                                                                                           : BondType::Single;
  }

  void addAtom(int atomicNumber, bool aromatic) {
    const int idx = graph_.addAtom(atomicNumber);
    aromatic_.push_back(aromatic);
    if (prev_ >= 0) {
      const BondType type = pending_ ? pending_->type : implicitBond(prev_, idx);
      graph_.addBond(prev_, idx, type);
    }
    pending_.reset();
    prev_ = idx;
  }

  void parseOrganicAtom() {
    const std::string_view rest = text_.substr(pos_);
    struct Organic {
      std::string_view symbol;
      int              z;
      bool             aromatic;
    };
    // Two-letter symbols first so "Cl" is not read as "C" + "l".
    static constexpr Organic kOrganic[] = {
        {"Cl", 17, false}, {"Br", 35, false}, {"B", 5, false}, {"C", 6, false}, {"N", 7, false},
        {"O", 8, false},   {"P", 15, false},  {"S", 16, false}, {"F", 9, false}, {"I", 53, false},
        {"b", 5, true},    {"c", 6, true},    {"n", 7, true},   {"o", 8, true},  {"p", 15, true},
        {"s", 16, true},
    };
    for (const Organic& o : kOrganic) {
      if (rest.substr(0, o.symbol.size()) == o.symbol) {
        addAtom(o.z, o.aromatic);
        pos_ += o.symbol.size();
        return;
      }
    }
    fail(Kind::UnsupportedToken, "element '" + std::string(1, text_[pos_]) + "' must be written in brackets");
  }

  void parseBracketAtom() {
    const std::size_t open = pos_;
    ++pos_;
    auto at = [&](std::size_t i) -> char { return i < text_.size() ? text_[i] : '\0'; };
    if (std::isdigit(static_cast<unsigned char>(at(pos_)))) {
      fail(Kind::UnsupportedToken, "isotopes are not supported");
    }
    int  z        = 0;
    bool aromatic = false;
    const char c0 = at(pos_);
    const char c1 = at(pos_ + 1);
    if (std::isupper(static_cast<unsigned char>(c0))) {
      if (std::islower(static_cast<unsigned char>(c1))) {
        z = atomicNumberFromSymbol(std::string{c0, c1});
        if (z != 0) {
          pos_ += 2;
        }
      }
      if (z == 0) {
        z = atomicNumberFromSymbol(std::string{c0});
        if (z == 0) fail(Kind::UnsupportedToken, "unknown element symbol");
        pos_ += 1;
      }
    } else if (std::islower(static_cast<unsigned char>(c0))) {
      aromatic = true;
      const std::string two{c0, c1};
      if (two == "se" || two == "as") {
        z = two == "se" ? 34 : 33;
        pos_ += 2;
      } else {
        switch (c0) {
          case 'b': z = 5; break;
          case 'c': z = 6; break;
          case 'n': z = 7; break;
          case 'o': z = 8; break;
          case 'p': z = 15; break;
          case 's': z = 16; break;
          default: fail(Kind::UnsupportedToken, "unknown aromatic symbol");
        }
        pos_ += 1;
      }
    } else {
      fail(Kind::UnsupportedToken, "expected an element symbol");
    }
    if (at(pos_) == '@') {
      fail(Kind::UnsupportedToken, "stereo markers are not supported");
    }
    if (at(pos_) == 'H') {
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(at(pos_)))) ++pos_;
    }
    if (at(pos_) == '+' || at(pos_) == '-') {
      const char sign = at(pos_);
      ++pos_;
      while (at(pos_) == sign) ++pos_;
      while (std::isdigit(static_cast<unsigned char>(at(pos_)))) ++pos_;
    }
    if (at(pos_) == ':') {
      fail(Kind::UnsupportedToken, "atom classes are not supported");
    }
    if (at(pos_) != ']') {
      if (pos_ >= text_.size()) {
        throw SmilesError(Kind::UnsupportedToken, open, "unterminated bracket atom");
      }
      fail(Kind::UnsupportedToken, "unexpected character in bracket atom");
    }
    ++pos_;
    addAtom(z, aromatic);
  }

  void parseRingClosure() {
    const std::size_t start = pos_;
    int               label = 0;
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
        fail(Kind::UnsupportedToken, "'%' must be followed by two digits");
      }
      label = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      label = text_[pos_] - '0';
      if (label == 0) fail(Kind::UnsupportedToken, "ring bond label 0 is not supported");
      pos_ += 1;
    }
    if (prev_ < 0) {
      throw SmilesError(Kind::DanglingRingClosure, start, "ring bond without a preceding atom");
    }
    auto it = rings_.find(label);
    if (it == rings_.end()) {
      rings_.emplace(label, OpenRing{prev_, pending_, start});
      pending_.reset();
      return;
    }
    const OpenRing ring = it->second;
    rings_.erase(it);
    BondType type = implicitBond(ring.atom, prev_);
    if (ring.bond && pending_ && ring.bond->type != pending_->type) {
      throw SmilesError(Kind::InvalidBond, start, "conflicting bond symbols on ring closure");
    }
    if (ring.bond) type = ring.bond->type;
    if (pending_) type = pending_->type;
    if (ring.atom == prev_) {
      throw SmilesError(Kind::InvalidBond, start, "ring closure onto the same atom");
    }
    if (graph_.hasBond(ring.atom, prev_)) {
      throw SmilesError(Kind::InvalidBond, start, "ring closure duplicates an existing bond");
    }
    graph_.addBond(ring.atom, prev_, type);
    pending_.reset();
  }

  std::string_view                              text_;
  std::size_t                                   pos_ = 0;
  MolGraph                                      graph_;
  std::vector<bool>                             aromatic_;
  int                                           prev_ = -1;
  std::optional<PendingBond>                    pending_;
  std::vector<std::pair<int, std::size_t>>      branches_;
  std::map<int, OpenRing>                       rings_;
};

}  // namespace

MolGraph parseSmiles(std::string_view text) {
  return Parser(text).run();
}

}  // namespace topocl
