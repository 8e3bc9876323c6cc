/*
 * Guest-side SDK: implements the ABI exports once around a pluggable codec.
 *
 * The worker shuttles between two ports: the plain side (internal pipe for
 * dial/accept, the outbound connection for a relay) and the wire side (the
 * network for dial/accept, the inbound connection for a relay). Bytes read
 * from the plain side are sealed onto the wire; wire bytes are accumulated
 * and opened back onto the plain side. Strictly single-threaded; all
 * multiplexing goes through poll_oneoff.
 */

#include "codec.h"
#include "watm.h"

#define CONFIG_CAP 8192

static uint8_t cfg[CONFIG_CAP];
static uint32_t cfg_len;
static int did_init;

static int32_t plain_fd = -1;
static int32_t wire_fd = -1;
static int32_t cancel_fd = -1;

static uint8_t chunk[4096];
static uint8_t acc[WATM_ACC_CAP];
static uint32_t acc_len;
static uint8_t sealed[WATM_SEAL_CAP];
static uint8_t opened[WATM_ACC_CAP];

/* Finds the value of the last `key=value` line in the config blob; later
 * lines override earlier ones. Returns length or -1. */
static int32_t config_get(const char *key, const uint8_t **value_out) {
    size_t key_len = watm_strlen(key);
    const uint8_t *found = 0;
    uint32_t found_len = 0;
    uint32_t pos = 0;
    while (pos < cfg_len) {
        uint32_t end = pos;
        while (end < cfg_len && cfg[end] != '\n') {
            end++;
        }
        uint32_t line_len = end - pos;
        if (line_len > key_len && cfg[pos + key_len] == '=' &&
            memcmp(cfg + pos, key, key_len) == 0) {
            found = cfg + pos + key_len + 1;
            found_len = line_len - (uint32_t)key_len - 1;
        }
        pos = end + 1;
    }
    if (!found) {
        return -1;
    }
    *value_out = found;
    return (int32_t)found_len;
}

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
        if (cfg_len == CONFIG_CAP) {
            /* One probe byte distinguishes "exactly full" from oversized. */
            uint8_t probe;
            int32_t extra = io_read(cfg_fd, &probe, 1);
            if (extra > 0) {
                return WATM_ERR_INVALID_CONFIG;
            }
            break;
        }
        int32_t n = io_read(cfg_fd, cfg + cfg_len, CONFIG_CAP - cfg_len);
        if (n < 0) {
            return WATM_ERR_FAILED_IO;
        }
        if (n == 0) {
            break;
        }
        cfg_len += (uint32_t)n;
    }
    wasi_fd_close(cfg_fd);
    int rc = codec_init(cfg, cfg_len);
    if (rc != WATM_OK) {
        return rc;
    }
    did_init = 1;
    return WATM_OK;
}

WATM_EXPORT("_water_cancel_with")
int32_t water_cancel_with(int32_t fd) {
    if (fd < 0) {
        return WATM_ERR_INVALID_FD;
    }
    cancel_fd = fd;
    return WATM_OK;
}

static int32_t dial_remote(void) {
    const uint8_t *remote;
    int32_t remote_len = config_get("remote", &remote);
    if (remote_len <= 0) {
        return WATM_ERR_INVALID_CONFIG;
    }
    return host_dial((const char *)remote, (uint32_t)remote_len);
}

WATM_EXPORT("_water_dial")
int32_t water_dial(int32_t internal_fd) {
    if (!did_init) {
        return WATM_ERR_NOT_INITIALIZED;
    }
    int32_t net = dial_remote();
    if (net < 0) {
        return net;
    }
    int rc = codec_handshake(WATM_ROLE_DIALER, net);
    if (rc != WATM_OK) {
        return rc;
    }
    plain_fd = internal_fd;
    wire_fd = net;
    return net;
}

WATM_EXPORT("_water_accept")
int32_t water_accept(int32_t internal_fd) {
    if (!did_init) {
        return WATM_ERR_NOT_INITIALIZED;
    }
    int32_t net = WATM_ACCEPTED_FD;
    int rc = codec_handshake(WATM_ROLE_LISTENER, net);
    if (rc != WATM_OK) {
        return rc;
    }
    plain_fd = internal_fd;
    wire_fd = net;
    return net;
}

WATM_EXPORT("_water_associate")
int32_t water_associate(void) {
    if (!did_init) {
        return WATM_ERR_NOT_INITIALIZED;
    }
    int32_t outbound = dial_remote();
    if (outbound < 0) {
        return outbound;
    }
    int rc = codec_handshake(WATM_ROLE_RELAY_INBOUND, WATM_ACCEPTED_FD);
    if (rc != WATM_OK) {
        return rc;
    }
    plain_fd = outbound;
    wire_fd = WATM_ACCEPTED_FD;
    return WATM_OK;
}

/* Seal one plain-side read (splitting to frame-size chunks) onto the wire. */
static int pump_plain_to_wire(uint32_t n) {
    uint32_t off = 0;
    while (off < n) {
        uint32_t piece = n - off;
        if (piece > WATM_MAX_PAYLOAD) {
            piece = WATM_MAX_PAYLOAD;
        }
        int32_t out_len = codec_seal(chunk + off, piece, sealed, WATM_SEAL_CAP);
        if (out_len <= 0) {
            return WATM_ERR_FAILED_IO;
        }
        if (io_write_all(wire_fd, sealed, (uint32_t)out_len) != WATM_OK) {
            return WATM_ERR_FAILED_IO;
        }
        off += piece;
    }
    return WATM_OK;
}

/* Decode every complete unit in the accumulator onto the plain side. */
static int drain_wire_acc(void) {
    for (;;) {
        uint32_t consumed = 0;
        int32_t out_len = codec_open(acc, acc_len, &consumed, opened, sizeof(opened));
        if (out_len == WATM_NEED_MORE) {
            return WATM_OK;
        }
        if (out_len < 0) {
            return (int)out_len;
        }
        if (out_len > 0 && io_write_all(plain_fd, opened, (uint32_t)out_len) != WATM_OK) {
            return WATM_ERR_FAILED_IO;
        }
        if (consumed == 0) {
            /* A codec must consume input when it reports progress. */
            return WATM_ERR_GENERAL;
        }
        memmove(acc, acc + consumed, acc_len - consumed);
        acc_len -= consumed;
    }
}

WATM_EXPORT("_water_worker")
int32_t water_worker(void) {
    if (!did_init || wire_fd < 0 || plain_fd < 0) {
        return WATM_ERR_NOT_INITIALIZED;
    }
    /* The wire's read side can reach EOF while the plain side still has
     * data to send (peer half-close); only a plain-side EOF ends the
     * connection from our end. */
    int wire_readable = 1;
    for (;;) {
        watm_subscription subs[3];
        watm_event events[3];
        int32_t nsubs = 0;
        memset(subs, 0, sizeof(subs));
        subs[nsubs].userdata = 1;
        subs[nsubs].tag = WATM_POLL_READ;
        subs[nsubs].fd = (uint32_t)plain_fd;
        nsubs++;
        if (wire_readable) {
            subs[nsubs].userdata = 2;
            subs[nsubs].tag = WATM_POLL_READ;
            subs[nsubs].fd = (uint32_t)wire_fd;
            nsubs++;
        }
        if (cancel_fd >= 0) {
            subs[nsubs].userdata = 3;
            subs[nsubs].tag = WATM_POLL_READ;
            subs[nsubs].fd = (uint32_t)cancel_fd;
            nsubs++;
        }
        uint32_t nevents = 0;
        if (wasi_poll_oneoff(subs, events, nsubs, &nevents) != 0) {
            return WATM_ERR_FAILED_IO;
        }
        for (uint32_t i = 0; i < nevents; i++) {
            switch (events[i].userdata) {
            case 3:
                return WATM_OK;
            case 1: {
                int32_t n = io_read(plain_fd, chunk, sizeof(chunk));
                if (n < 0) {
                    return WATM_ERR_FAILED_IO;
                }
                if (n == 0) {
                    /* Caller is done; everything sealed so far was already
                     * written through. */
                    return WATM_OK;
                }
                int rc = pump_plain_to_wire((uint32_t)n);
                if (rc != WATM_OK) {
                    return rc;
                }
                break;
            }
            case 2: {
                uint32_t space = WATM_ACC_CAP - acc_len;
                if (space == 0) {
                    /* Cannot happen: a drained accumulator always has room
                     * for at least one maximal frame. */
                    return WATM_ERR_GENERAL;
                }
                int32_t n = io_read(wire_fd, acc + acc_len, space);
                if (n < 0) {
                    return WATM_ERR_FAILED_IO;
                }
                if (n == 0) {
                    int rc = drain_wire_acc();
                    if (rc != WATM_OK) {
                        return rc;
                    }
                    if (acc_len != 0) {
                        /* Peer quit mid-frame. */
                        return WATM_ERR_FAILED_IO;
                    }
                    wire_readable = 0;
                    break;
                }
                acc_len += (uint32_t)n;
                int rc = drain_wire_acc();
                if (rc != WATM_OK) {
                    return rc;
                }
                break;
            }
            default:
                break;
            }
        }
    }
}
