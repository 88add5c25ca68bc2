/* C interface to the poolforge storage engine.
 *
 * Every function returns PF_OK (0) on success or a PF_ERR_* code; the
 * message for the most recent failure on the calling thread is available
 * via pf_last_error(). Buffers handed out through out-parameters are
 * malloc'd and must be released with pf_free().
 */
#ifndef POOLFORGE_H
#define POOLFORGE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct pf_pool pf_pool;

enum pf_errc {
  PF_OK = 0,
  PF_ERR_EXISTS,
  PF_ERR_NOT_FOUND,
  PF_ERR_BOUNDS,
  PF_ERR_IO,
  PF_ERR_INVALID,
  PF_ERR_READ_ONLY,
  PF_ERR_NO_SPACE,
  PF_ERR_PERMANENT,
  PF_ERR_UNRECOVERABLE,
  PF_ERR_CORRUPT_STREAM,
  PF_ERR_NO_BASE,
  PF_ERR_LINEAGE,
  PF_ERR_DOUBLE_FREE,
  PF_ERR_UNLABELED,
  PF_ERR_PARSE,
  PF_ERR_BUSY,
  PF_ERR_SCENARIO_FAILED,
  PF_ERR_UNKNOWN
};

const char* pf_last_error(void);
void pf_free(void* p);

/* ---- devices & faults ---- */
int pf_device_create(const char* path, uint64_t capacity_sectors, uint32_t sector_size);
/* kind: "corrupt" (param = seed), "offline", "read-error", "latency"
 * (param = added virtual ms) */
int pf_fault_inject(const char* path, const char* kind, uint64_t first_sector,
                    uint64_t sector_count, uint64_t param);
int pf_fault_clear(const char* path);

/* ---- pool lifecycle ---- */
int pf_pool_create(const char* const* dev_paths, size_t ndev, const char* name,
                   uint32_t record_size /* 0 = default */,
                   uint64_t guid_seed /* 0 = random */, pf_pool** out);
int pf_pool_import(const char* const* dev_paths, size_t ndev, pf_pool** out);
void pf_pool_close(pf_pool* p);
/* JSON: name, guid, children, geometry, space, datasets with snapshot and
 * content hashes. */
int pf_pool_status(pf_pool* p, char** json_out);
/* out[0..3] = blocks examined, checksum errors found, repaired, permanent. */
int pf_pool_scrub(pf_pool* p, uint64_t out[4]);

/* ---- datasets ---- */
int pf_fs_create(pf_pool* p, const char* dataset);
int pf_fs_write(pf_pool* p, const char* dataset, uint64_t object_id, uint64_t offset,
                const void* data, size_t len);
int pf_fs_read(pf_pool* p, const char* dataset, uint64_t object_id, uint64_t offset,
               size_t len, uint8_t** data_out, size_t* len_out);
int pf_fs_snapshot(pf_pool* p, const char* dataset, const char* snapshot);
int pf_fs_clone(pf_pool* p, const char* dataset, const char* snapshot, const char* new_name);
int pf_fs_destroy_snapshot(pf_pool* p, const char* dataset, const char* snapshot,
                           uint64_t* freed_sectors_out);
int pf_fs_space(pf_pool* p, const char* dataset, char** json_out);
int pf_diff(pf_pool* p, const char* dataset, const char* snap_a, const char* snap_b,
            char** json_out);

/* ---- backup streams ---- */
/* from_snapshot NULL: full stream; otherwise incremental. */
int pf_send(pf_pool* p, const char* dataset, const char* snapshot,
            const char* from_snapshot, uint8_t** data_out, size_t* len_out);
int pf_recv(pf_pool* p, const uint8_t* stream, size_t len, int force, char** json_out);
int pf_stream_info(const uint8_t* stream, size_t len, char** json_out);

/* ---- simulation & metrics ---- */
/* Runs the scenario at scenario_path on pools created under workdir.
 * use_seed nonzero overrides the file's seed. Optional outputs (pass NULL
 * to skip): wide CSV, SVG plot of svg_series ("a,b,c"; NULL = defaults),
 * event log. json_out gets a run summary. */
int pf_sim_run(const char* scenario_path, int use_seed, uint64_t seed,
               const char* workdir, const char* csv_path, const char* svg_path,
               const char* svg_series, const char* eventlog_path, char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* POOLFORGE_H */
