/* Minimal MPI stand-in so generated translations can be compile-checked
 * without an MPI installation. Communication calls are no-ops; this header
 * is for `-c` compile tests only, never for running. */
#ifndef OMP2DM_TEST_MPI_H
#define OMP2DM_TEST_MPI_H

typedef int MPI_Comm;
typedef int MPI_Datatype;

#define MPI_COMM_WORLD 0
#define MPI_INT 1
#define MPI_LONG 2
#define MPI_FLOAT 3
#define MPI_DOUBLE 4
#define MPI_ANY_SOURCE (-1)
#define MPI_ANY_TAG (-1)

typedef struct {
    int MPI_SOURCE;
    int MPI_TAG;
    int MPI_ERROR;
} MPI_Status;

static inline int MPI_Init(int *argc, char ***argv) {
    (void)argc;
    (void)argv;
    return 0;
}

static inline int MPI_Finalize(void) { return 0; }

static inline int MPI_Comm_rank(MPI_Comm comm, int *rank) {
    (void)comm;
    *rank = 0;
    return 0;
}

static inline int MPI_Comm_size(MPI_Comm comm, int *size) {
    (void)comm;
    *size = 1;
    return 0;
}

static inline int MPI_Send(const void *buf, int count, MPI_Datatype datatype, int dest, int tag,
                           MPI_Comm comm) {
    (void)buf;
    (void)count;
    (void)datatype;
    (void)dest;
    (void)tag;
    (void)comm;
    return 0;
}

static inline int MPI_Recv(void *buf, int count, MPI_Datatype datatype, int source, int tag,
                           MPI_Comm comm, MPI_Status *status) {
    (void)buf;
    (void)count;
    (void)datatype;
    (void)source;
    (void)tag;
    (void)comm;
    status->MPI_SOURCE = 0;
    status->MPI_TAG = 0;
    return 0;
}

#endif
