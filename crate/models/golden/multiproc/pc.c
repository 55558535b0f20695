/* pc */
#include <stdint.h>
#include <avr/io.h>
#include "blocks.h"
#include "com.h"
static uint16_t Repeater_out_buf[1];
void comB_thread(void)
{
    switch (comB_next()) {
    case ID_x2: com_recv_comB(GATE_comB, node0, Repeater_out_buf, sizeof Repeater_out_buf); break;
    }
}
int main(void)
{
    PCDisplay_init();
    for (;;) {
        sem_wait(&Suc0);
        PCDisplay_loop();
        timer_wait(); /* 8 STU */
    }
    PCDisplay_end();
    return 0;
}
/* end of pc */
