/* Diagnostic module: dials the configured remote and writes the exact
 * config blob it received over that connection, then finishes. Verifies
 * byte fidelity of the config delivery path end to end. Standalone (does
 * not use the SDK worker). */

#include "watm.h"

#define ECHO_CFG_CAP (160 * 1024)

static uint8_t cfg[ECHO_CFG_CAP];
static uint32_t cfg_len;
static int did_init;
static int32_t net_fd = -1;

WATM_EXPORT("_water_v1")
int32_t water_v1(void) {
    return 1;
}

WATM_EXPORT("_water_init")
int32_t water_init(void) {
    if (did_init) {
        return WATM_ERR_DOUBLE_INIT;
    }
    int32_t cfg_fd = pull_config();
    if (cfg_fd < 0) {
        return cfg_fd;
    }
    cfg_len = 0;
    for (;;) {
        if (cfg_len == ECHO_CFG_CAP) {
            return WATM_ERR_INVALID_CONFIG;
        }
        int32_t n = io_read(cfg_fd, cfg + cfg_len, ECHO_CFG_CAP - cfg_len);
        if (n < 0) {
            return WATM_ERR_FAILED_IO;
        }
        if (n == 0) {
            break;
        }
        cfg_len += (uint32_t)n;
    }
    wasi_fd_close(cfg_fd);
    did_init = 1;
    return WATM_OK;
}

WATM_EXPORT("_water_cancel_with")
int32_t water_cancel_with(int32_t fd) {
    if (fd < 0) {
        return WATM_ERR_INVALID_FD;
    }
    return WATM_OK;
}

WATM_EXPORT("_water_dial")
int32_t water_dial(int32_t internal_fd) {
    (void)internal_fd;
    if (!did_init) {
        return WATM_ERR_NOT_INITIALIZED;
    }
    /* Last remote= line wins. */
    const uint8_t *remote = 0;
    uint32_t remote_len = 0;
    uint32_t pos = 0;
    while (pos < cfg_len) {
        uint32_t end = pos;
        while (end < cfg_len && cfg[end] != '\n') {
            end++;
        }
        if (end - pos > 7 && memcmp(cfg + pos, "remote=", 7) == 0) {
            remote = cfg + pos + 7;
            remote_len = end - pos - 7;
        }
        pos = end + 1;
    }
    if (!remote) {
        return WATM_ERR_INVALID_CONFIG;
    }
    int32_t fd = host_dial((const char *)remote, remote_len);
    if (fd < 0) {
        return fd;
    }
    net_fd = fd;
    return fd;
}

WATM_EXPORT("_water_worker")
int32_t water_worker(void) {
    if (net_fd < 0) {
        return WATM_ERR_NOT_INITIALIZED;
    }
    if (io_write_all(net_fd, cfg, cfg_len) != WATM_OK) {
        return WATM_ERR_FAILED_IO;
    }
    wasi_fd_close(net_fd);
    return WATM_OK;
}
