#pragma once

#include <memory>
#include <optional>

#include "common.hpp"

namespace poolforge {

// One label region spans this many sectors at the head and again at the tail
// of the device. Sector i of a region carries uberblock ring slot i at byte
// offset 256; sector 0 additionally carries the label header at byte offset 0.
constexpr uint64_t kLabelSectors = 128;
constexpr uint64_t kMinCapacitySectors = 256;
constexpr uint32_t kUberblockSlots = 128;
constexpr size_t kUberblockSlotOffset = 256;  // within its sector
constexpr size_t kUberblockSlotSize = 128;
constexpr size_t kLabelHeaderSize = 96;
constexpr char kLabelMagic[9] = "PFVDEV01";
constexpr char kUberblockMagic[9] = "PFUBER01";

struct FaultSpec {
  enum class Kind { SilentCorruption, Offline, ReadError, Latency };
  Kind kind;
  uint64_t first_sector = 0;
  uint64_t sector_count = 0;
  uint64_t param = 0;  // corruption seed, or added latency in virtual ms
};

struct LabelHeader {
  Guid pool_guid;
  Guid device_guid;
  uint32_t child_index = 0;
  uint32_t child_count = 0;
  uint32_t sector_size = 0;
};

struct UberblockData {
  uint64_t txg = 0;
  uint64_t timestamp = 0;  // virtual ms
  BlockRef catalog_root;
};

// Every physical write, for the crash-consistency harness. Children of one
// pool can share a journal vector; dev disambiguates them while the vector
// order preserves the global write sequence.
struct WriteOp {
  uint32_t dev = 0;
  uint64_t offset_bytes = 0;
  std::vector<uint8_t> bytes;
};

class Device {
 public:
  // Creates a new zero-filled device file. Refuses to overwrite.
  static std::unique_ptr<Device> create(const std::string& path, uint64_t capacity_sectors,
                                        uint32_t sector_size = 512);
  // Opens an existing device file. Sector size comes from the label when one
  // is present, otherwise from the fallback.
  static std::unique_ptr<Device> open(const std::string& path, uint32_t fallback_sector_size = 512);
  // A placeholder for an absent child: every I/O fails. Used by degraded import.
  static std::unique_ptr<Device> missing(uint64_t capacity_sectors, uint32_t sector_size);

  ~Device();
  Device(const Device&) = delete;
  Device& operator=(const Device&) = delete;

  std::vector<uint8_t> read_sectors(uint64_t offset_sectors, uint64_t count);
  void write_sectors(uint64_t offset_sectors, const uint8_t* data, size_t len);
  void write_sectors(uint64_t offset_sectors, const std::vector<uint8_t>& v) {
    write_sectors(offset_sectors, v.data(), v.size());
  }

  // Silent corruption mutates the file immediately (deterministic per seed);
  // other kinds persist to a sidecar so separate processes observe them.
  void inject_fault(const FaultSpec& f);
  void clear_faults();
  const std::vector<FaultSpec>& faults() const { return faults_; }

  void write_label(const LabelHeader& h);
  LabelHeader read_label() const;  // throws unlabeled if both copies invalid
  bool is_labeled() const;

  void write_uberblock(const UberblockData& u);  // slot txg % kUberblockSlots, both copies
  std::optional<UberblockData> best_uberblock() const;

  uint64_t capacity_sectors() const { return capacity_sectors_; }
  uint32_t sector_size() const { return sector_size_; }
  const std::string& path() const { return path_; }
  bool is_missing() const { return missing_; }
  uint64_t accumulated_latency_ms() const { return latency_ms_; }

  void set_journal(std::vector<WriteOp>* j, uint32_t dev_id = 0) {
    journal_ = j;
    journal_dev_id_ = dev_id;
  }

 private:
  Device() = default;
  void raw_read(uint64_t off_bytes, uint8_t* out, size_t len) const;
  void raw_write(uint64_t off_bytes, const uint8_t* data, size_t len);
  void check_faults_for_io(uint64_t first, uint64_t count, bool is_read);
  void load_sidecar();
  void save_sidecar() const;
  std::string sidecar_path() const { return path_ + ".faults"; }
  std::optional<LabelHeader> parse_label_at(uint64_t region_sector) const;
  std::optional<UberblockData> parse_slot(uint64_t region_sector, uint32_t slot) const;

  std::string path_;
  std::FILE* file_ = nullptr;
  uint64_t capacity_sectors_ = 0;
  uint32_t sector_size_ = 512;
  bool missing_ = false;
  std::vector<FaultSpec> faults_;
  mutable uint64_t latency_ms_ = 0;
  std::vector<WriteOp>* journal_ = nullptr;
  uint32_t journal_dev_id_ = 0;
};

}  // namespace poolforge
