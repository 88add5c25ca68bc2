#include "vdev.hpp"

#include <sys/stat.h>

#include <cstdio>
#include <fstream>

namespace poolforge {

namespace {

bool file_exists(const std::string& p) {
  struct stat st;
  return ::stat(p.c_str(), &st) == 0;
}

const char* fault_kind_name(FaultSpec::Kind k) {
  switch (k) {
    case FaultSpec::Kind::SilentCorruption: return "silent-corruption";
    case FaultSpec::Kind::Offline: return "offline";
    case FaultSpec::Kind::ReadError: return "read-error";
    case FaultSpec::Kind::Latency: return "latency";
  }
  return "?";
}

std::optional<FaultSpec::Kind> fault_kind_from_name(const std::string& s) {
  if (s == "silent-corruption") return FaultSpec::Kind::SilentCorruption;
  if (s == "offline") return FaultSpec::Kind::Offline;
  if (s == "read-error") return FaultSpec::Kind::ReadError;
  if (s == "latency") return FaultSpec::Kind::Latency;
  return std::nullopt;
}

}  // namespace

std::unique_ptr<Device> Device::create(const std::string& path, uint64_t capacity_sectors,
                                       uint32_t sector_size) {
  if (file_exists(path)) fail(Errc::exists, "device path exists: " + path);
  if (capacity_sectors < kMinCapacitySectors)
    fail(Errc::invalid, "capacity below minimum of 256 sectors");
  if (sector_size < 512 || (sector_size & (sector_size - 1)) != 0)
    fail(Errc::invalid, "sector size must be a power of two >= 512");
  std::FILE* f = std::fopen(path.c_str(), "wb+");
  if (!f) fail(Errc::io, "cannot create " + path);
  uint64_t total = capacity_sectors * uint64_t(sector_size);
  if (total > 0) {
    if (std::fseek(f, long(total - 1), SEEK_SET) != 0 || std::fwrite("", 1, 1, f) != 1) {
      std::fclose(f);
      fail(Errc::io, "cannot size " + path);
    }
  }
  std::fflush(f);
  auto d = std::unique_ptr<Device>(new Device());
  d->path_ = path;
  d->file_ = f;
  d->capacity_sectors_ = capacity_sectors;
  d->sector_size_ = sector_size;
  return d;
}

std::unique_ptr<Device> Device::open(const std::string& path, uint32_t fallback_sector_size) {
  std::FILE* f = std::fopen(path.c_str(), "rb+");
  if (!f) fail(Errc::io, "cannot open " + path);
  auto d = std::unique_ptr<Device>(new Device());
  d->path_ = path;
  d->file_ = f;
  d->sector_size_ = fallback_sector_size;
  // peek at the head label to learn the real sector size
  uint8_t hdr[kLabelHeaderSize];
  std::fseek(f, 0, SEEK_SET);
  if (std::fread(hdr, 1, sizeof hdr, f) == sizeof hdr &&
      std::memcmp(hdr, kLabelMagic, 8) == 0) {
    Digest want;
    std::memcpy(want.data(), hdr + 64, 32);
    if (sha256(hdr, 64) == want) {
      uint32_t ss = 0;
      for (int i = 0; i < 4; i++) ss |= uint32_t(hdr[56 + i]) << (8 * i);
      if (ss >= 512) d->sector_size_ = ss;
    }
  }
  std::fseek(f, 0, SEEK_END);
  long sz = std::ftell(f);
  if (sz < 0 || uint64_t(sz) % d->sector_size_ != 0)
    fail(Errc::invalid, "file size not a sector multiple: " + path);
  d->capacity_sectors_ = uint64_t(sz) / d->sector_size_;
  if (d->capacity_sectors_ < kMinCapacitySectors)
    fail(Errc::invalid, "device too small: " + path);
  d->load_sidecar();
  return d;
}

std::unique_ptr<Device> Device::missing(uint64_t capacity_sectors, uint32_t sector_size) {
  auto d = std::unique_ptr<Device>(new Device());
  d->missing_ = true;
  d->capacity_sectors_ = capacity_sectors;
  d->sector_size_ = sector_size;
  return d;
}

Device::~Device() {
  if (file_) std::fclose(file_);
}

void Device::raw_read(uint64_t off_bytes, uint8_t* out, size_t len) const {
  if (missing_) fail(Errc::io, "device missing");
  if (std::fseek(file_, long(off_bytes), SEEK_SET) != 0 ||
      std::fread(out, 1, len, file_) != len)
    fail(Errc::io, "read failed: " + path_);
}

void Device::raw_write(uint64_t off_bytes, const uint8_t* data, size_t len) {
  if (missing_) fail(Errc::io, "device missing");
  if (std::fseek(file_, long(off_bytes), SEEK_SET) != 0 ||
      std::fwrite(data, 1, len, file_) != len)
    fail(Errc::io, "write failed: " + path_);
  std::fflush(file_);
}

void Device::check_faults_for_io(uint64_t first, uint64_t count, bool is_read) {
  for (const auto& f : faults_) {
    bool overlap = first < f.first_sector + f.sector_count && f.first_sector < first + count;
    switch (f.kind) {
      case FaultSpec::Kind::Offline:
        fail(Errc::io, "device offline: " + path_);
      case FaultSpec::Kind::ReadError:
        if (is_read && overlap) fail(Errc::io, "injected read error: " + path_);
        break;
      case FaultSpec::Kind::Latency:
        if (overlap) latency_ms_ += f.param;
        break;
      case FaultSpec::Kind::SilentCorruption:
        break;  // applied at injection time
    }
  }
}

std::vector<uint8_t> Device::read_sectors(uint64_t offset_sectors, uint64_t count) {
  if (offset_sectors + count > capacity_sectors_ || offset_sectors + count < offset_sectors)
    fail(Errc::bounds, "read out of range");
  check_faults_for_io(offset_sectors, count, true);
  std::vector<uint8_t> out(count * sector_size_);
  raw_read(offset_sectors * sector_size_, out.data(), out.size());
  return out;
}

void Device::write_sectors(uint64_t offset_sectors, const uint8_t* data, size_t len) {
  if (len % sector_size_ != 0) fail(Errc::invalid, "write length not a sector multiple");
  uint64_t count = len / sector_size_;
  if (offset_sectors + count > capacity_sectors_ || offset_sectors + count < offset_sectors)
    fail(Errc::bounds, "write out of range");
  check_faults_for_io(offset_sectors, count, false);
  raw_write(offset_sectors * sector_size_, data, len);
  if (journal_) journal_->push_back(WriteOp{journal_dev_id_, offset_sectors * sector_size_,
                                            std::vector<uint8_t>(data, data + len)});
}

void Device::inject_fault(const FaultSpec& f) {
  if (f.kind == FaultSpec::Kind::SilentCorruption) {
    // Flip one deterministic bit per targeted sector, directly in the file.
    for (uint64_t s = f.first_sector; s < f.first_sector + f.sector_count; s++) {
      if (s >= capacity_sectors_) fail(Errc::bounds, "fault range out of range");
      uint64_t st = f.param + s * 0x9e3779b97f4a7c15ULL;
      uint64_t r = splitmix64(st);
      uint64_t byte_idx = r % sector_size_;
      uint8_t bit = uint8_t((r >> 32) & 7);
      uint8_t b;
      raw_read(s * sector_size_ + byte_idx, &b, 1);
      b ^= uint8_t(1u << bit);
      raw_write(s * sector_size_ + byte_idx, &b, 1);
    }
    return;
  }
  faults_.push_back(f);
  save_sidecar();
}

void Device::clear_faults() {
  faults_.clear();
  std::remove(sidecar_path().c_str());
}

void Device::load_sidecar() {
  std::ifstream in(sidecar_path());
  if (!in) return;
  std::string kind;
  FaultSpec f;
  while (in >> kind >> f.first_sector >> f.sector_count >> f.param) {
    auto k = fault_kind_from_name(kind);
    if (!k) continue;
    f.kind = *k;
    faults_.push_back(f);
  }
}

void Device::save_sidecar() const {
  std::ofstream out(sidecar_path(), std::ios::trunc);
  for (const auto& f : faults_)
    out << fault_kind_name(f.kind) << ' ' << f.first_sector << ' ' << f.sector_count << ' '
        << f.param << '\n';
}

// ---- labels and the uberblock ring ----

namespace {

void serialize_label_header(uint8_t out[kLabelHeaderSize], const LabelHeader& h) {
  std::memset(out, 0, kLabelHeaderSize);
  std::memcpy(out, kLabelMagic, 8);
  auto put64 = [&](size_t off, uint64_t v) {
    for (int i = 0; i < 8; i++) out[off + i] = uint8_t(v >> (8 * i));
  };
  auto put32 = [&](size_t off, uint32_t v) {
    for (int i = 0; i < 4; i++) out[off + i] = uint8_t(v >> (8 * i));
  };
  put64(8, h.pool_guid.hi);
  put64(16, h.pool_guid.lo);
  put64(24, h.device_guid.hi);
  put64(32, h.device_guid.lo);
  put32(40, h.child_index);
  put32(44, h.child_count);
  put32(56, h.sector_size);
  Digest d = sha256(out, 64);
  std::memcpy(out + 64, d.data(), 32);
}

std::optional<LabelHeader> parse_label_header(const uint8_t* b) {
  if (std::memcmp(b, kLabelMagic, 8) != 0) return std::nullopt;
  Digest want;
  std::memcpy(want.data(), b + 64, 32);
  if (sha256(b, 64) != want) return std::nullopt;
  auto get64 = [&](size_t off) {
    uint64_t v = 0;
    for (int i = 0; i < 8; i++) v |= uint64_t(b[off + i]) << (8 * i);
    return v;
  };
  auto get32 = [&](size_t off) {
    uint32_t v = 0;
    for (int i = 0; i < 4; i++) v |= uint32_t(b[off + i]) << (8 * i);
    return v;
  };
  LabelHeader h;
  h.pool_guid = Guid{get64(8), get64(16)};
  h.device_guid = Guid{get64(24), get64(32)};
  h.child_index = get32(40);
  h.child_count = get32(44);
  h.sector_size = get32(56);
  return h;
}

void serialize_uberblock(uint8_t out[kUberblockSlotSize], const UberblockData& u) {
  std::memset(out, 0, kUberblockSlotSize);
  std::memcpy(out, kUberblockMagic, 8);
  auto put64 = [&](size_t off, uint64_t v) {
    for (int i = 0; i < 8; i++) out[off + i] = uint8_t(v >> (8 * i));
  };
  put64(8, u.txg);
  put64(16, u.timestamp);
  put_blockref(out + 32, u.catalog_root);
  Digest d = sha256(out, 96);
  std::memcpy(out + 96, d.data(), 32);
}

std::optional<UberblockData> parse_uberblock(const uint8_t* b) {
  if (std::memcmp(b, kUberblockMagic, 8) != 0) return std::nullopt;
  Digest want;
  std::memcpy(want.data(), b + 96, 32);
  if (sha256(b, 96) != want) return std::nullopt;
  auto get64 = [&](size_t off) {
    uint64_t v = 0;
    for (int i = 0; i < 8; i++) v |= uint64_t(b[off + i]) << (8 * i);
    return v;
  };
  UberblockData u;
  u.txg = get64(8);
  u.timestamp = get64(16);
  u.catalog_root = get_blockref(b + 32);
  return u;
}

}  // namespace

std::optional<LabelHeader> Device::parse_label_at(uint64_t region_sector) const {
  if (missing_) return std::nullopt;
  std::vector<uint8_t> sec(sector_size_);
  try {
    raw_read(region_sector * sector_size_, sec.data(), sec.size());
  } catch (const Error&) {
    return std::nullopt;
  }
  return parse_label_header(sec.data());
}

void Device::write_label(const LabelHeader& h) {
  for (uint64_t region : {uint64_t(0), capacity_sectors_ - kLabelSectors}) {
    std::vector<uint8_t> sec = read_sectors(region, 1);
    serialize_label_header(sec.data(), h);
    write_sectors(region, sec);
  }
}

LabelHeader Device::read_label() const {
  auto a = parse_label_at(0);
  auto b = parse_label_at(capacity_sectors_ - kLabelSectors);
  if (!a && !b) fail(Errc::unlabeled, "unlabeled device: " + path_);
  if (a && b) {
    // Prefer the copy whose best uberblock slot carries the higher txg.
    uint64_t ta = 0, tb = 0;
    for (uint32_t s = 0; s < kUberblockSlots; s++) {
      if (auto u = parse_slot(0, s); u && u->txg > ta) ta = u->txg;
      if (auto u = parse_slot(capacity_sectors_ - kLabelSectors, s); u && u->txg > tb) tb = u->txg;
    }
    return tb > ta ? *b : *a;
  }
  return a ? *a : *b;
}

bool Device::is_labeled() const {
  return parse_label_at(0) || parse_label_at(capacity_sectors_ - kLabelSectors);
}

std::optional<UberblockData> Device::parse_slot(uint64_t region_sector, uint32_t slot) const {
  if (missing_) return std::nullopt;
  std::vector<uint8_t> sec(sector_size_);
  try {
    raw_read((region_sector + slot) * sector_size_, sec.data(), sec.size());
  } catch (const Error&) {
    return std::nullopt;
  }
  return parse_uberblock(sec.data() + kUberblockSlotOffset);
}

void Device::write_uberblock(const UberblockData& u) {
  uint32_t slot = uint32_t(u.txg % kUberblockSlots);
  for (uint64_t region : {uint64_t(0), capacity_sectors_ - kLabelSectors}) {
    std::vector<uint8_t> sec = read_sectors(region + slot, 1);
    serialize_uberblock(sec.data() + kUberblockSlotOffset, u);
    write_sectors(region + slot, sec);
  }
}

std::optional<UberblockData> Device::best_uberblock() const {
  std::optional<UberblockData> best;
  for (uint64_t region : {uint64_t(0), capacity_sectors_ - kLabelSectors}) {
    for (uint32_t s = 0; s < kUberblockSlots; s++) {
      auto u = parse_slot(region, s);
      if (u && (!best || u->txg > best->txg)) best = u;
    }
  }
  return best;
}

}  // namespace poolforge
