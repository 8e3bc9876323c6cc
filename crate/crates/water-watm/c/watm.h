/*
 * Transport-module ABI, guest side. Declares the imports provided by the
 * water runtime (the water_host namespace plus the preview-1 descriptor
 * I/O subset) and the shared constants. See docs/watm-abi-v1.md.
 */
#ifndef WATM_H
#define WATM_H

#include <stddef.h>
#include <stdint.h>

/* ABI status codes. 0 is success; descriptor-producing calls return the
 * descriptor number (>= 0) on success. */
#define WATM_OK 0
#define WATM_ERR_GENERAL (-1)
#define WATM_ERR_INVALID_ARGUMENT (-2)
#define WATM_ERR_INVALID_CONFIG (-3)
#define WATM_ERR_INVALID_FD (-4)
#define WATM_ERR_INVALID_FUNCTION (-5)
#define WATM_ERR_DOUBLE_INIT (-6)
#define WATM_ERR_FAILED_IO (-7)
#define WATM_ERR_NOT_INITIALIZED (-8)
#define WATM_ERR_NETWORK_UNREACHABLE (-9)

/* Handshake roles. */
#define WATM_ROLE_DIALER 0
#define WATM_ROLE_LISTENER 1
#define WATM_ROLE_RELAY_INBOUND 2

/* On accept/associate flows the inbound network descriptor is always the
 * first one pushed into a fresh instance. */
#define WATM_ACCEPTED_FD 3

#define WATM_EXPORT(name) __attribute__((export_name(name)))
#define WATM_HOST_IMPORT(name) \
    __attribute__((import_module("water_host"), import_name(name)))
#define WATM_WASI_IMPORT(name) \
    __attribute__((import_module("wasi_snapshot_preview1"), import_name(name)))

/* water_host imports */
WATM_HOST_IMPORT("host_dial") int32_t host_dial(const char *addr, uint32_t addr_len);
WATM_HOST_IMPORT("pull_config") int32_t pull_config(void);
WATM_HOST_IMPORT("host_log") int32_t host_log(int32_t level, const char *msg, uint32_t len);
WATM_HOST_IMPORT("host_defer") int32_t host_defer(void);

#define WATM_LOG_ERROR 0
#define WATM_LOG_WARN 1
#define WATM_LOG_INFO 2
#define WATM_LOG_DEBUG 3

/* preview-1 descriptor I/O subset */
typedef struct {
    void *buf;
    uint32_t len;
} watm_iovec;

WATM_WASI_IMPORT("fd_read")
int32_t wasi_fd_read(int32_t fd, const watm_iovec *iovs, int32_t iovs_len, uint32_t *nread);
WATM_WASI_IMPORT("fd_write")
int32_t wasi_fd_write(int32_t fd, const watm_iovec *iovs, int32_t iovs_len, uint32_t *nwritten);
WATM_WASI_IMPORT("fd_close") int32_t wasi_fd_close(int32_t fd);
WATM_WASI_IMPORT("poll_oneoff")
int32_t wasi_poll_oneoff(const void *subs, void *events, int32_t nsubs, uint32_t *nevents);
WATM_WASI_IMPORT("random_get") int32_t wasi_random_get(void *buf, uint32_t len);

/* poll_oneoff wire structures (preview-1 layout) */
typedef struct {
    uint64_t userdata;  /* offset 0 */
    uint8_t tag;        /* offset 8: 0 clock, 1 fd_read, 2 fd_write */
    uint8_t pad0[7];
    uint32_t fd;        /* offset 16 (fd subscriptions) */
    uint8_t pad1[28];   /* total size 48 */
} watm_subscription;

typedef struct {
    uint64_t userdata; /* offset 0 */
    uint16_t errno_;   /* offset 8 */
    uint8_t type;      /* offset 10 */
    uint8_t pad0[5];
    uint64_t nbytes;   /* offset 16 */
    uint16_t flags;    /* offset 24: bit 0 = hangup */
    uint8_t pad1[6];   /* total size 32 */
} watm_event;

_Static_assert(sizeof(watm_subscription) == 48, "subscription layout");
_Static_assert(sizeof(watm_event) == 32, "event layout");

#define WATM_POLL_READ 1
#define WATM_POLL_WRITE 2

/* Blocking I/O helpers over fd_read/fd_write. */
static inline int32_t io_read(int32_t fd, void *buf, uint32_t cap) {
    watm_iovec iov = {buf, cap};
    uint32_t n = 0;
    int32_t rc = wasi_fd_read(fd, &iov, 1, &n);
    if (rc != 0) {
        return WATM_ERR_FAILED_IO;
    }
    return (int32_t)n;
}

static inline int io_read_exact(int32_t fd, uint8_t *buf, uint32_t len) {
    uint32_t off = 0;
    while (off < len) {
        int32_t n = io_read(fd, buf + off, len - off);
        if (n <= 0) {
            return WATM_ERR_FAILED_IO;
        }
        off += (uint32_t)n;
    }
    return WATM_OK;
}

static inline int io_write_all(int32_t fd, const uint8_t *buf, uint32_t len) {
    uint32_t off = 0;
    while (off < len) {
        watm_iovec iov = {(void *)(buf + off), len - off};
        uint32_t n = 0;
        int32_t rc = wasi_fd_write(fd, &iov, 1, &n);
        if (rc != 0 || n == 0) {
            return WATM_ERR_FAILED_IO;
        }
        off += n;
    }
    return WATM_OK;
}

/* freestanding mem functions (support.c) */
void *memcpy(void *dst, const void *src, size_t n);
void *memmove(void *dst, const void *src, size_t n);
void *memset(void *dst, int value, size_t n);
int memcmp(const void *a, const void *b, size_t n);
size_t watm_strlen(const char *s);

#endif /* WATM_H */
