/*
 * Transform contract a transport implements; the SDK supplies the exports
 * and the worker loop around it. One codec instance per module instance.
 */
#ifndef WATM_CODEC_H
#define WATM_CODEC_H

#include "watm.h"

/* Largest plaintext a single codec_seal call accepts. */
#define WATM_MAX_PAYLOAD 0x3FFF
/* Worst-case seal output: salt prefix + sealed length + sealed payload. */
#define WATM_SEAL_CAP (32 + 18 + WATM_MAX_PAYLOAD + 16)
/* Wire accumulation bound: twice the largest frame. */
#define WATM_ACC_CAP (2 * (18 + WATM_MAX_PAYLOAD + 16))

/* codec_open: not enough buffered wire bytes for the next step. */
#define WATM_NEED_MORE (-100)

/* Parse the config blob; WATM_OK or WATM_ERR_INVALID_CONFIG. */
int codec_init(const uint8_t *config, uint32_t config_len);

/* Run the role's handshake over the network descriptor. */
int codec_handshake(int role, int32_t net_fd);

/* Transform one outbound chunk (in_len <= WATM_MAX_PAYLOAD, in_len > 0).
 * Writes the wire form into out (capacity WATM_SEAL_CAP) and returns its
 * length, or a negative status. Must not return 0 for nonempty input. */
int32_t codec_seal(const uint8_t *in, uint32_t in_len, uint8_t *out, uint32_t out_cap);

/* Resumable inbound decode over the accumulated wire bytes. Returns the
 * number of plaintext bytes written to out (possibly 0) with *consumed set,
 * WATM_NEED_MORE when the buffered input is incomplete (nothing consumed),
 * or a negative status on a fatal codec error. */
int32_t codec_open(const uint8_t *in, uint32_t in_len, uint32_t *consumed, uint8_t *out,
                   uint32_t out_cap);

#endif /* WATM_CODEC_H */
