/* Identity transform: forwards bytes as received, both directions. */

#include "codec.h"

int codec_init(const uint8_t *config, uint32_t config_len) {
    (void)config;
    (void)config_len;
    return WATM_OK;
}

int codec_handshake(int role, int32_t net_fd) {
    (void)role;
    (void)net_fd;
    return WATM_OK;
}

int32_t codec_seal(const uint8_t *in, uint32_t in_len, uint8_t *out, uint32_t out_cap) {
    if (in_len > out_cap) {
        return WATM_ERR_GENERAL;
    }
    memcpy(out, in, in_len);
    return (int32_t)in_len;
}

int32_t codec_open(const uint8_t *in, uint32_t in_len, uint32_t *consumed, uint8_t *out,
                   uint32_t out_cap) {
    if (in_len == 0) {
        return WATM_NEED_MORE;
    }
    if (in_len > out_cap) {
        return WATM_ERR_GENERAL;
    }
    memcpy(out, in, in_len);
    *consumed = in_len;
    return (int32_t)in_len;
}
