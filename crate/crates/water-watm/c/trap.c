/* Diagnostic transport: handshakes fine, then hits an unreachable as soon
 * as any byte needs transforming. Exists to prove a trapping instance
 * poisons only its own connection. */

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
    (void)in;
    (void)in_len;
    (void)out;
    (void)out_cap;
    __builtin_trap();
}

int32_t codec_open(const uint8_t *in, uint32_t in_len, uint32_t *consumed, uint8_t *out,
                   uint32_t out_cap) {
    (void)in;
    (void)in_len;
    (void)consumed;
    (void)out;
    (void)out_cap;
    __builtin_trap();
}
