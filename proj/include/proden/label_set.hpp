#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "proden/errors.hpp"

namespace proden {

// Subset of [0, c) stored as a bit mask, one 64-bit word per 64 classes.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::size_t class_count) : class_count_(class_count), words_((class_count + 63) / 64, 0) {}

  static LabelSet singleton(std::size_t class_count, std::size_t label) {
    LabelSet s(class_count);
    s.insert(label);
    return s;
  }

  static LabelSet of(std::size_t class_count, std::initializer_list<std::size_t> labels) {
    LabelSet s(class_count);
    for (auto l : labels) s.insert(l);
    return s;
  }

  static LabelSet from_words(std::size_t class_count, std::vector<std::uint64_t> words) {
    LabelSet s(class_count);
    if (words.size() != s.words_.size()) throw FormatError("label mask word count does not match class count");
    const std::size_t tail = class_count % 64;
    if (tail != 0 && (words.back() >> tail) != 0) throw FormatError("label mask has bits beyond class count");
    s.words_ = std::move(words);
    return s;
  }

  std::size_t class_count() const noexcept { return class_count_; }

  void insert(std::size_t label) {
    check(label);
    words_[label / 64] |= std::uint64_t{1} << (label % 64);
  }

  void erase(std::size_t label) {
    check(label);
    words_[label / 64] &= ~(std::uint64_t{1} << (label % 64));
  }

  bool contains(std::size_t label) const noexcept {
    return label < class_count_ && ((words_[label / 64] >> (label % 64)) & 1U) != 0;
  }

  std::size_t size() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  bool empty() const noexcept { return size() == 0; }
  bool is_full() const noexcept { return size() == class_count_; }

  // Calls f(label) for every member in increasing order.
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits != 0) {
        f(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
        bits &= bits - 1;
      }
    }
  }

  std::vector<std::size_t> labels() const {
    std::vector<std::size_t> out;
    for_each([&](std::size_t l) { out.push_back(l); });
    return out;
  }

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  void check(std::size_t label) const {
    if (label >= class_count_) {
      throw DomainError("label " + std::to_string(label) + " outside [0, " + std::to_string(class_count_) + ")");
    }
  }

  std::size_t class_count_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace proden
