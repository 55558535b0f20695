/* node0 */
#include <stdint.h>
#include <avr/io.h>
#include "blocks.h"
#include "com.h"
static uint16_t Repeater_out_buf[1];
static uint16_t TTTTemperature_temp_buf[1];
void comA_thread(void)
{
    switch (comA_next()) {
    case ID_x0: com_recv_comA(GATE_comA, node3, TTTTemperature_temp_buf, sizeof TTTTemperature_temp_buf); break;
    }
}
void comB_thread(void)
{
    switch (comB_next()) {
    case ID_x2: com_send_comB(GATE_comB, pc, Repeater_out_buf, sizeof Repeater_out_buf); break;
    }
}
int main(void)
{
    Repeater_init();
    for (;;) {
        sem_wait(&Suc0);
        Repeater_loop();
        sem_post(&Pre1);
        timer_wait(); /* 13 STU */
    }
    Repeater_end();
    return 0;
}
/* end of node0 */
