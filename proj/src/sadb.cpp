#include "qesp/sadb.hpp"

#include <charconv>

#include "qesp/error.hpp"

namespace qesp {

std::string_view to_string(Variant v) { return v == Variant::Qesp ? "qesp" : "esp"; }
std::string_view to_string(Mode m) { return m == Mode::Transport ? "transport" : "tunnel"; }

bool Ipv4Prefix::contains(Ipv4Address a) const {
  if (length == 0) return true;
  std::uint32_t mask = length >= 32 ? 0xffffffffu : ~(0xffffffffu >> length);
  return (a & mask) == (addr & mask);
}

std::optional<Ipv4Prefix> Ipv4Prefix::parse(std::string_view text) {
  if (text == "any") return any();
  auto slash = text.find('/');
  auto addr = parse_ipv4_address(text.substr(0, slash));
  if (!addr) return std::nullopt;
  unsigned len = 32;
  if (slash != std::string_view::npos) {
    auto digits = text.substr(slash + 1);
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), len);
    if (ec != std::errc{} || p != digits.data() + digits.size() || len > 32) return std::nullopt;
  }
  return Ipv4Prefix{*addr, static_cast<std::uint8_t>(len)};
}

bool Selector::matches(Ipv4Address src, Ipv4Address dst, std::uint8_t proto,
                       std::optional<std::uint16_t> src_port,
                       std::optional<std::uint16_t> dst_port) const {
  if (!src_net.contains(src) || !dst_net.contains(dst)) return false;
  if (protocol && *protocol != proto) return false;
  if (src_ports && (!src_port || !src_ports->contains(*src_port))) return false;
  if (dst_ports && (!dst_port || !dst_ports->contains(*dst_port))) return false;
  return true;
}

// ---------------------------------------------------------------------------

bool ReplayWindow::check_and_update(std::uint32_t seq) {
  if (seq == 0) return false;
  if (seq > highest_) {
    std::uint32_t shift = seq - highest_;
    bitmap_ = shift >= kWidth ? 0 : bitmap_ << shift;
    bitmap_ |= 1;
    highest_ = seq;
    return true;
  }
  std::uint32_t offset = highest_ - seq;
  if (offset >= kWidth) return false;
  std::uint64_t bit = std::uint64_t{1} << offset;
  if (bitmap_ & bit) return false;
  bitmap_ |= bit;
  return true;
}

// ---------------------------------------------------------------------------

SecurityAssociation::SecurityAssociation(SaConfig config)
    : config_(std::move(config)), iv_gen_(config_.iv_seed) {
  if (config_.spi == 0) fail(Errc::ConfigError, "SPI 0 is reserved");
  if (config_.cipher_key.size() != traits(config_.cipher).key_len)
    fail(Errc::BadKeyLength, "SA " + std::to_string(config_.spi) + ": " +
                                 std::string(to_string(config_.cipher)) + " needs a " +
                                 std::to_string(traits(config_.cipher).key_len) + "-byte key");
  if (config_.mac_key.size() != traits(config_.mac).key_len)
    fail(Errc::BadKeyLength, "SA " + std::to_string(config_.spi) + ": " +
                                 std::string(to_string(config_.mac)) + " needs a " +
                                 std::to_string(traits(config_.mac).key_len) + "-byte key");
  if (config_.variant == Variant::Esp && config_.extended_auth)
    fail(Errc::ConfigError, "SA " + std::to_string(config_.spi) +
                                ": extended_auth is only defined for Q-ESP");
}

std::uint32_t SecurityAssociation::next_seq() {
  std::lock_guard lock(mutex_);
  if (seq_next_ >= 0xffffffffu)
    fail(Errc::SequenceExhausted, "SA " + std::to_string(config_.spi) + " sequence space exhausted");
  return static_cast<std::uint32_t>(seq_next_++);
}

std::uint32_t SecurityAssociation::peek_next_seq() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::uint32_t>(seq_next_);
}

void SecurityAssociation::set_next_seq(std::uint64_t next) {
  std::lock_guard lock(mutex_);
  seq_next_ = next;
}

bool SecurityAssociation::replay_check_and_update(std::uint32_t seq) {
  std::lock_guard lock(mutex_);
  return replay_.check_and_update(seq);
}

ReplayWindow SecurityAssociation::replay_window() const {
  std::lock_guard lock(mutex_);
  return replay_;
}

Bytes SecurityAssociation::next_iv() {
  std::lock_guard lock(mutex_);
  return iv_gen_.next(traits(config_.cipher).iv_len);
}

// ---------------------------------------------------------------------------

SecurityAssociation& Sadb::add_sa(SaConfig config) {
  if (by_spi_.contains(config.spi))
    fail(Errc::DuplicateSpi, "SPI " + std::to_string(config.spi) + " already present");
  auto sa = std::make_unique<SecurityAssociation>(std::move(config));
  auto& ref = *sa;
  by_spi_.emplace(ref.spi(), &ref);
  ordered_.push_back(std::move(sa));
  return ref;
}

SecurityAssociation* Sadb::lookup_by_spi(std::uint32_t spi) {
  auto it = by_spi_.find(spi);
  return it == by_spi_.end() ? nullptr : it->second;
}

const SecurityAssociation* Sadb::lookup_by_spi(std::uint32_t spi) const {
  auto it = by_spi_.find(spi);
  return it == by_spi_.end() ? nullptr : it->second;
}

SecurityAssociation* Sadb::lookup_outbound(const FiveTuple& t) {
  for (auto& sa : ordered_)
    if (sa->config().selector.matches(t)) return sa.get();
  return nullptr;
}

}  // namespace qesp
