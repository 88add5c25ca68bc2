#include "raidz.hpp"

namespace poolforge {

namespace {

std::vector<uint8_t> read_one(const RaidzGeometry& g, uint64_t row, uint32_t col) {
  return g.children[col]->read_sectors(kLabelSectors + row, 1);
}

void write_one(const RaidzGeometry& g, uint64_t row, uint32_t col,
               const std::vector<uint8_t>& sec) {
  g.children[col]->write_sectors(kLabelSectors + row, sec);
}

}  // namespace

StripeMap plan_stripe(uint32_t s, int d, uint64_t start_row) {
  if (s == 0) fail(Errc::invalid, "stripe needs at least one data sector");
  if (d < 2 || d > 16) fail(Errc::invalid, "raidz needs 2..16 children");
  StripeMap m;
  m.start_row = start_row;
  m.data_sectors = s;
  m.d = d;
  uint32_t k = uint32_t(d - 1);
  m.parity_sectors = (s + k - 1) / k;
  m.skip_sectors = (s + m.parity_sectors) % 2;
  uint32_t rem = s % k;
  for (uint32_t r = 0; r < m.parity_sectors; r++) {
    uint32_t dc = (r + 1 < m.parity_sectors || rem == 0) ? k : rem;
    m.rows.push_back({start_row + r, dc});
  }
  if (m.skip_sectors) {
    uint32_t last_dc = m.rows.back().data_count;
    if (last_dc + 1 < uint32_t(d))
      m.skip_pos = StripePos{m.rows.back().row, last_dc + 1};
    else
      m.skip_pos = StripePos{m.rows.back().row + 1, 0};
  }
  return m;
}

std::vector<uint8_t> compute_parity(const std::vector<std::vector<uint8_t>>& data_sectors) {
  if (data_sectors.empty()) fail(Errc::invalid, "parity over zero sectors");
  std::vector<uint8_t> p = data_sectors[0];
  for (size_t i = 1; i < data_sectors.size(); i++) {
    if (data_sectors[i].size() != p.size()) fail(Errc::invalid, "sector size mismatch");
    for (size_t j = 0; j < p.size(); j++) p[j] ^= data_sectors[i][j];
  }
  return p;
}

std::vector<uint8_t> reconstruct_row(const std::vector<std::vector<uint8_t>>& present) {
  return compute_parity(present);
}

void write_block(const RaidzGeometry& g, const StripeMap& m, const uint8_t* data, size_t len) {
  uint32_t ss = g.sector_size;
  if (len != size_t(m.data_sectors) * ss) fail(Errc::invalid, "data length mismatch");
  std::string first_error;
  auto attempt = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (first_error.empty()) first_error = e.what();
    }
  };
  uint32_t di = 0;
  for (const auto& row : m.rows) {
    std::vector<std::vector<uint8_t>> row_data;
    for (uint32_t c = 0; c < row.data_count; c++, di++) {
      row_data.emplace_back(data + size_t(di) * ss, data + size_t(di + 1) * ss);
      attempt([&] { write_one(g, row.row, c + 1, row_data.back()); });
    }
    std::vector<uint8_t> parity = compute_parity(row_data);
    attempt([&] { write_one(g, row.row, 0, parity); });
  }
  if (m.skip_pos) {
    std::vector<uint8_t> zero(ss, 0);
    attempt([&] { write_one(g, m.skip_pos->row, m.skip_pos->col, zero); });
  }
  if (!first_error.empty()) fail(Errc::io, "write_block: " + first_error);
}

BlockRead read_block(const RaidzGeometry& g, const StripeMap& m) {
  uint32_t ss = g.sector_size;
  BlockRead out;
  out.data.reserve(size_t(m.data_sectors) * ss);
  for (const auto& row : m.rows) {
    std::vector<std::vector<uint8_t>> got(row.data_count);
    std::vector<uint32_t> bad;
    for (uint32_t c = 0; c < row.data_count; c++) {
      try {
        got[c] = read_one(g, row.row, c + 1);
      } catch (const Error&) {
        bad.push_back(c);
      }
    }
    if (bad.size() > 1) fail(Errc::unrecoverable, "two unreadable sectors in one row");
    if (bad.size() == 1) {
      std::vector<std::vector<uint8_t>> present;
      try {
        present.push_back(read_one(g, row.row, 0));  // parity
      } catch (const Error&) {
        fail(Errc::unrecoverable, "parity and data both unreadable in one row");
      }
      for (uint32_t c = 0; c < row.data_count; c++)
        if (c != bad[0]) present.push_back(got[c]);
      got[bad[0]] = reconstruct_row(present);
      out.degraded = true;
      out.failed_child = int(bad[0] + 1);
    }
    for (auto& sec : got) out.data.insert(out.data.end(), sec.begin(), sec.end());
  }
  return out;
}

RepairResult verify_and_repair(const RaidzGeometry& g, const StripeMap& m,
                               const Digest& expected) {
  BlockRead plain;
  bool plain_ok = true;
  try {
    plain = read_block(g, m);
  } catch (const Error&) {
    plain_ok = false;
  }
  if (plain_ok && sha256(plain.data) == expected) {
    RepairResult r;
    r.data = std::move(plain.data);
    r.repaired_child = plain.degraded ? plain.failed_child : -1;
    return r;
  }
  // Try each data column as the corrupt one and let the checksum arbitrate.
  uint32_t ss = g.sector_size;
  for (int c = 1; c < m.d; c++) {
    std::vector<uint8_t> candidate;
    std::vector<std::pair<StripePos, std::vector<uint8_t>>> rewrites;
    bool feasible = true;
    candidate.reserve(size_t(m.data_sectors) * ss);
    for (const auto& row : m.rows) {
      std::vector<std::vector<uint8_t>> got(row.data_count);
      try {
        for (uint32_t i = 0; i < row.data_count; i++) got[i] = read_one(g, row.row, i + 1);
        if (uint32_t(c) <= row.data_count) {
          std::vector<std::vector<uint8_t>> present;
          present.push_back(read_one(g, row.row, 0));
          for (uint32_t i = 0; i < row.data_count; i++)
            if (i + 1 != uint32_t(c)) present.push_back(got[i]);
          auto fixed = reconstruct_row(present);
          if (fixed != got[c - 1])
            rewrites.push_back({StripePos{row.row, uint32_t(c)}, fixed});
          got[c - 1] = std::move(fixed);
        }
      } catch (const Error&) {
        feasible = false;
        break;
      }
      for (auto& sec : got) candidate.insert(candidate.end(), sec.begin(), sec.end());
    }
    if (!feasible) continue;
    if (sha256(candidate) == expected) {
      for (const auto& [pos, sec] : rewrites) write_one(g, pos.row, pos.col, sec);
      RepairResult r;
      r.data = std::move(candidate);
      r.repaired_child = c;
      return r;
    }
  }
  fail(Errc::permanent, "permanent error: no reconstruction matches checksum");
}

uint32_t repair_row_parity(const RaidzGeometry& g, const StripeMap& m) {
  uint32_t fixed = 0;
  for (const auto& row : m.rows) {
    std::vector<std::vector<uint8_t>> data;
    std::vector<uint8_t> on_disk;
    try {
      for (uint32_t c = 0; c < row.data_count; c++) data.push_back(read_one(g, row.row, c + 1));
      on_disk = read_one(g, row.row, 0);
    } catch (const Error&) {
      continue;  // degraded rows are the read path's problem, not a parity scrub's
    }
    auto want = compute_parity(data);
    if (want != on_disk) {
      write_one(g, row.row, 0, want);
      fixed++;
    }
  }
  return fixed;
}

}  // namespace poolforge
