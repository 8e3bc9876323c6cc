/* Authenticated stream transport: per-direction 32-byte salt, HKDF-SHA256
 * subkeys, and ChaCha20-Poly1305 frames of a sealed 2-byte big-endian
 * length followed by the sealed payload. The nonce is a 96-bit
 * little-endian counter, one increment per sealed message. */

#include "codec.h"
#include "crypto.h"

#define SALT_LEN 32
#define TAG_LEN 16
#define LEN_SECTION (2 + TAG_LEN)

static const char PSK_INFO[] = "water-psk";
static const char SUBKEY_INFO[] = "water-subkey";

static uint8_t psk[32];

static struct {
    uint8_t key[32];
    uint8_t nonce[12];
    uint8_t salt[SALT_LEN];
    int salt_sent;
} send_state;

enum recv_stage {
    RECV_NEED_SALT,
    RECV_NEED_LEN,
    RECV_NEED_PAYLOAD,
};

static struct {
    uint8_t key[32];
    uint8_t nonce[12];
    enum recv_stage stage;
    uint32_t payload_len;
} recv_state;

static void nonce_inc(uint8_t nonce[12]) {
    for (int i = 0; i < 12; i++) {
        if (++nonce[i] != 0) {
            break;
        }
    }
}

static void derive_subkey(const uint8_t salt[SALT_LEN], uint8_t out[32]) {
    hkdf_sha256_32(salt, SALT_LEN, psk, 32, (const uint8_t *)SUBKEY_INFO,
                   sizeof(SUBKEY_INFO) - 1, out);
}

int codec_init(const uint8_t *config, uint32_t config_len) {
    /* password= is required; scan for the last occurrence. */
    const uint8_t *password = 0;
    uint32_t password_len = 0;
    uint32_t pos = 0;
    while (pos < config_len) {
        uint32_t end = pos;
        while (end < config_len && config[end] != '\n') {
            end++;
        }
        if (end - pos > 9 && memcmp(config + pos, "password=", 9) == 0) {
            password = config + pos + 9;
            password_len = end - pos - 9;
        }
        pos = end + 1;
    }
    if (!password || password_len == 0) {
        return WATM_ERR_INVALID_CONFIG;
    }
    hkdf_sha256_32(0, 0, password, password_len, (const uint8_t *)PSK_INFO, sizeof(PSK_INFO) - 1,
                   psk);
    return WATM_OK;
}

int codec_handshake(int role, int32_t net_fd) {
    if (wasi_random_get(send_state.salt, SALT_LEN) != 0) {
        return WATM_ERR_FAILED_IO;
    }
    derive_subkey(send_state.salt, send_state.key);
    memset(send_state.nonce, 0, 12);
    send_state.salt_sent = 0;
    memset(recv_state.nonce, 0, 12);

    if (role == WATM_ROLE_DIALER) {
        /* Salt goes out ahead of any frame. */
        if (io_write_all(net_fd, send_state.salt, SALT_LEN) != WATM_OK) {
            return WATM_ERR_FAILED_IO;
        }
        send_state.salt_sent = 1;
        recv_state.stage = RECV_NEED_SALT;
        return WATM_OK;
    }

    /* Listener and relay-inbound: read the peer salt, then read and
     * authenticate the first length section so a wrong password fails the
     * accept, not some later read. */
    uint8_t peer_salt[SALT_LEN];
    if (io_read_exact(net_fd, peer_salt, SALT_LEN) != WATM_OK) {
        return WATM_ERR_FAILED_IO;
    }
    derive_subkey(peer_salt, recv_state.key);
    recv_state.stage = RECV_NEED_LEN;

    uint8_t len_section[LEN_SECTION];
    if (io_read_exact(net_fd, len_section, LEN_SECTION) != WATM_OK) {
        return WATM_ERR_FAILED_IO;
    }
    uint32_t consumed = 0;
    uint8_t none;
    int32_t rc = codec_open(len_section, LEN_SECTION, &consumed, &none, 0);
    if (rc != 0 || consumed != LEN_SECTION) {
        return WATM_ERR_FAILED_IO;
    }
    return WATM_OK;
}

int32_t codec_seal(const uint8_t *in, uint32_t in_len, uint8_t *out, uint32_t out_cap) {
    if (in_len == 0 || in_len > WATM_MAX_PAYLOAD) {
        return WATM_ERR_INVALID_ARGUMENT;
    }
    uint32_t need = LEN_SECTION + in_len + TAG_LEN + (send_state.salt_sent ? 0 : SALT_LEN);
    if (need > out_cap) {
        return WATM_ERR_GENERAL;
    }
    uint32_t off = 0;
    if (!send_state.salt_sent) {
        memcpy(out, send_state.salt, SALT_LEN);
        send_state.salt_sent = 1;
        off = SALT_LEN;
    }
    uint8_t len_be[2] = {(uint8_t)(in_len >> 8), (uint8_t)in_len};
    chacha20poly1305_seal(send_state.key, send_state.nonce, len_be, 2, out + off);
    nonce_inc(send_state.nonce);
    off += LEN_SECTION;
    chacha20poly1305_seal(send_state.key, send_state.nonce, in, in_len, out + off);
    nonce_inc(send_state.nonce);
    off += in_len + TAG_LEN;
    return (int32_t)off;
}

int32_t codec_open(const uint8_t *in, uint32_t in_len, uint32_t *consumed, uint8_t *out,
                   uint32_t out_cap) {
    switch (recv_state.stage) {
    case RECV_NEED_SALT: {
        if (in_len < SALT_LEN) {
            return WATM_NEED_MORE;
        }
        derive_subkey(in, recv_state.key);
        recv_state.stage = RECV_NEED_LEN;
        *consumed = SALT_LEN;
        return 0;
    }
    case RECV_NEED_LEN: {
        if (in_len < LEN_SECTION) {
            return WATM_NEED_MORE;
        }
        uint8_t len_be[2];
        if (chacha20poly1305_open(recv_state.key, recv_state.nonce, in, LEN_SECTION, len_be) !=
            0) {
            return WATM_ERR_FAILED_IO;
        }
        nonce_inc(recv_state.nonce);
        uint32_t len = ((uint32_t)len_be[0] << 8) | len_be[1];
        if (len == 0 || len > WATM_MAX_PAYLOAD) {
            return WATM_ERR_FAILED_IO;
        }
        recv_state.payload_len = len;
        recv_state.stage = RECV_NEED_PAYLOAD;
        *consumed = LEN_SECTION;
        return 0;
    }
    case RECV_NEED_PAYLOAD: {
        uint32_t want = recv_state.payload_len + TAG_LEN;
        if (in_len < want) {
            return WATM_NEED_MORE;
        }
        if (recv_state.payload_len > out_cap) {
            return WATM_ERR_GENERAL;
        }
        if (chacha20poly1305_open(recv_state.key, recv_state.nonce, in, want, out) != 0) {
            return WATM_ERR_FAILED_IO;
        }
        nonce_inc(recv_state.nonce);
        recv_state.stage = RECV_NEED_LEN;
        *consumed = want;
        return (int32_t)recv_state.payload_len;
    }
    }
    return WATM_ERR_GENERAL;
}
